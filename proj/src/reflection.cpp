#include "repsample/reflection.hpp"

#include <algorithm>
#include <cmath>

#include "repsample/error.hpp"

namespace repsample {

EmpiricalDistribution1D EmpiricalDistribution1D::from_values(std::span<const double> values) {
  EmpiricalDistribution1D d;
  d.kind_ = Kind::continuous;
  d.n_ = values.size();
  d.sorted_.assign(values.begin(), values.end());
  for (double v : d.sorted_) {
    if (!std::isfinite(v)) throw DataError("empirical distribution holds a non-finite value");
  }
  std::sort(d.sorted_.begin(), d.sorted_.end());
  return d;
}

EmpiricalDistribution1D EmpiricalDistribution1D::from_codes(std::span<const std::int32_t> codes,
                                                            std::span<const double> positions) {
  if (!std::is_sorted(positions.begin(), positions.end())) {
    throw ConfigError("category positions must be nondecreasing");
  }
  EmpiricalDistribution1D d;
  d.kind_ = Kind::categorical;
  d.n_ = codes.size();
  d.positions_.assign(positions.begin(), positions.end());
  d.probabilities_.assign(positions.size(), 0.0);
  for (std::int32_t c : codes) {
    if (c < 0 || static_cast<std::size_t>(c) >= positions.size()) throw DataError("category code out of range");
    d.probabilities_[static_cast<std::size_t>(c)] += 1.0;
  }
  if (d.n_ > 0) {
    for (double& p : d.probabilities_) p /= static_cast<double>(d.n_);
  }
  return d;
}

EmpiricalDistribution1D EmpiricalDistribution1D::of_feature(const TabularDataset& ds, std::size_t feature) {
  const FeatureSpec& f = ds.schema()[feature];
  if (!f.is_categorical()) return from_values(ds.real(feature));
  std::vector<double> pos = f.category_positions();
  if (std::is_sorted(pos.begin(), pos.end())) return from_codes(ds.codes(feature), pos);
  // Declared order disagrees with numeric order: compare as plain values.
  return from_values(ds.numeric_column(feature));
}

namespace {

void check_pair(const EmpiricalDistribution1D& a, const EmpiricalDistribution1D& b) {
  if (a.empty() || b.empty()) throw ConfigError("distribution comparison needs nonempty inputs");
  if (a.kind() != b.kind()) throw ConfigError("cannot compare continuous with categorical distributions");
  if (a.kind() == EmpiricalDistribution1D::Kind::categorical && a.positions() != b.positions()) {
    throw ConfigError("categorical distributions use different category codes");
  }
}

// Walks the merged support of two sorted samples, calling f(x, F_a(x), F_b(x),
// next_x) at every breakpoint x; CDF values hold on [x, next_x).
template <typename F>
void walk_merged(const std::vector<double>& a, const std::vector<double>& b, F&& f) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) x = a[i];
    else x = b[j];
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    double next;
    if (i < a.size() && j < b.size()) next = std::min(a[i], b[j]);
    else if (i < a.size()) next = a[i];
    else if (j < b.size()) next = b[j];
    else next = x;
    f(x, static_cast<double>(i) / na, static_cast<double>(j) / nb, next);
  }
}

}  // namespace

double ks_statistic(const EmpiricalDistribution1D& a, const EmpiricalDistribution1D& b) {
  check_pair(a, b);
  double best = 0.0;
  if (a.kind() == EmpiricalDistribution1D::Kind::categorical) {
    double fa = 0.0;
    double fb = 0.0;
    for (std::size_t c = 0; c < a.probabilities().size(); ++c) {
      fa += a.probabilities()[c];
      fb += b.probabilities()[c];
      best = std::max(best, std::fabs(fa - fb));
    }
    return std::min(best, 1.0);
  }
  walk_merged(a.sorted(), b.sorted(), [&](double, double fa, double fb, double) {
    best = std::max(best, std::fabs(fa - fb));
  });
  return best;
}

double wasserstein1(const EmpiricalDistribution1D& a, const EmpiricalDistribution1D& b) {
  check_pair(a, b);
  double total = 0.0;
  if (a.kind() == EmpiricalDistribution1D::Kind::categorical) {
    const auto& pos = a.positions();
    double fa = 0.0;
    double fb = 0.0;
    for (std::size_t c = 0; c + 1 < pos.size(); ++c) {
      fa += a.probabilities()[c];
      fb += b.probabilities()[c];
      total += std::fabs(fa - fb) * (pos[c + 1] - pos[c]);
    }
    return total;
  }
  walk_merged(a.sorted(), b.sorted(), [&](double x, double fa, double fb, double next) {
    total += std::fabs(fa - fb) * (next - x);
  });
  return total;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  return ks_statistic(EmpiricalDistribution1D::from_values(a), EmpiricalDistribution1D::from_values(b));
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
  return wasserstein1(EmpiricalDistribution1D::from_values(a), EmpiricalDistribution1D::from_values(b));
}

TTestResult mean_comparison(std::span<const double> sample, std::span<const double> population) {
  return welch_t_test(sample, population);
}

std::vector<MetricReport> reflection_report(const TabularDataset& sample, const TabularDataset& population,
                                            std::span<const std::string> features, const std::string& label) {
  if (!(sample.schema() == population.schema())) throw ConfigError("sample and population schemas differ");
  std::vector<std::string> names(features.begin(), features.end());
  if (names.empty()) {
    for (const FeatureSpec& f : population.schema().features()) {
      if (f.is_model_input()) names.push_back(f.name);
    }
  }
  std::vector<MetricReport> out;
  for (const std::string& name : names) {
    const std::size_t j = population.schema().index_of(name);
    const auto ds = EmpiricalDistribution1D::of_feature(sample, j);
    const auto dp = EmpiricalDistribution1D::of_feature(population, j);
    MetricReport ks{"ks", name, ks_statistic(ds, dp)};
    MetricReport w1{"wasserstein1", name, wasserstein1(ds, dp)};
    ks.sample = w1.sample = label;
    out.push_back(std::move(ks));
    out.push_back(std::move(w1));
    if (sample.n_rows() >= 2 && population.n_rows() >= 2) {
      const auto xs = sample.numeric_column(j);
      const auto xp = population.numeric_column(j);
      const TTestResult t = mean_comparison(xs, xp);
      MetricReport m{"mean_difference", name, t.mean_diff};
      m.sample = label;
      m.extra = {{"t_statistic", json_number(t.t)}, {"p_value", t.p_value}, {"df", json_number(t.df)}};
      out.push_back(std::move(m));
    }
  }
  return out;
}

}  // namespace repsample
