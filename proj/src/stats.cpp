#include "repsample/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "repsample/error.hpp"

namespace repsample {
namespace {

double two_sided_p(double t, double df) {
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

TTestResult degenerate(double mean_diff, double df) {
  TTestResult r;
  r.df = df;
  r.mean_diff = mean_diff;
  if (mean_diff == 0.0) {
    r.t = 0.0;
    r.p_value = 1.0;
  } else {
    r.t = std::copysign(std::numeric_limits<double>::infinity(), mean_diff);
    r.p_value = 0.0;
  }
  return r;
}

}  // namespace

double mean(std::span<const double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("paired t-test needs equal-length inputs");
  if (a.size() < 2) throw ConfigError("paired t-test needs at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double n = static_cast<double>(d.size());
  const double m = mean(d);
  const double sd = sample_sd(d);
  if (!(sd > 0.0)) return degenerate(m, n - 1.0);
  TTestResult r;
  r.mean_diff = m;
  r.df = n - 1.0;
  r.t = m / (sd / std::sqrt(n));
  r.p_value = two_sided_p(r.t, r.df);
  return r;
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ConfigError("Welch t-test needs at least two values per group");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a);
  const double mb = mean(b);
  const double va = std::pow(sample_sd(a), 2) / na;
  const double vb = std::pow(sample_sd(b), 2) / nb;
  const double se2 = va + vb;
  if (!(se2 > 0.0)) return degenerate(ma - mb, na + nb - 2.0);
  TTestResult r;
  r.mean_diff = ma - mb;
  r.t = r.mean_diff / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p_value = two_sided_p(r.t, r.df);
  return r;
}

std::vector<double> bh_adjust(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p-value " + std::to_string(p) + " outside [0, 1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> adjusted(m);
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const std::size_t i = order[k];
    const double scaled =
        k + 1 == m ? p_values[i] : p_values[i] * static_cast<double>(m) / static_cast<double>(k + 1);
    running = std::min(running, scaled);
    adjusted[i] = std::min(1.0, running);
  }
  return adjusted;
}

}  // namespace repsample
