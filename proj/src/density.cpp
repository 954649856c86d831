#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "repsample/error.hpp"
#include "repsample/samplers.hpp"
#include "repsample/simd/kernels.hpp"

namespace repsample {
namespace {

constexpr std::size_t kBlock = 2048;

// Mean Euclidean distance from each query row in [begin, end) to its k
// nearest other rows.
void knn_mean_distance(const Eigen::MatrixXd& x, std::size_t k, std::size_t begin, std::size_t end,
                       std::vector<double>& out) {
  const simd::KernelTable& kern = simd::kernels();
  const std::size_t n = static_cast<std::size_t>(x.rows());
  const std::size_t p = static_cast<std::size_t>(x.cols());
  std::vector<double> acc(kBlock);
  std::vector<double> best(k);
  std::vector<double> query(p);

  for (std::size_t i = begin; i < end; ++i) {
    for (std::size_t j = 0; j < p; ++j) query[j] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t b0 = 0; b0 < n; b0 += kBlock) {
      const std::size_t len = std::min(kBlock, n - b0);
      std::fill_n(acc.begin(), len, 0.0);
      for (std::size_t j = 0; j < p; ++j) {
        kern.add_squared_diff(acc.data(), x.col(static_cast<Eigen::Index>(j)).data() + b0, query[j], len);
      }
      for (std::size_t t = 0; t < len; ++t) {
        const double d = acc[t];
        if (d < worst && b0 + t != i) {
          // Insert into the sorted list of the k smallest.
          std::size_t pos = k - 1;
          while (pos > 0 && best[pos - 1] > d) {
            best[pos] = best[pos - 1];
            --pos;
          }
          best[pos] = d;
          worst = best[k - 1];
        }
      }
    }
    double s = 0.0;
    for (double d2 : best) s += std::sqrt(d2);
    out[i] = s / static_cast<double>(k);
  }
}

}  // namespace

DensityWeights compute_density_weights(const FeatureMatrix& fm, std::size_t k, double temperature,
                                       unsigned threads) {
  const std::size_t n = fm.rows();
  if (k < 1 || k >= n) {
    throw ConfigError("density weights need 1 <= k < n (k = " + std::to_string(k) + ", n = " + std::to_string(n) + ")");
  }
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be finite and >= 0");

  DensityWeights w;
  w.k = k;
  w.temperature = temperature;
  w.distances.assign(n, 0.0);

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    knn_mean_distance(fm.values, k, 0, n, w.distances);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(n, b + chunk);
      if (b >= e) break;
      pool.emplace_back(knn_mean_distance, std::cref(fm.values), k, b, e, std::ref(w.distances));
    }
    for (auto& th : pool) th.join();
  }

  w.weights.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w.weights[i] = temperature == 0.0 ? 1.0 : std::pow(w.distances[i], temperature);
    total += w.weights[i];
  }
  if (!(total > 0.0)) {
    w.uniform_fallback = true;
    std::fill(w.weights.begin(), w.weights.end(), 1.0 / static_cast<double>(n));
    return w;
  }
  for (double& v : w.weights) v /= total;
  return w;
}

}  // namespace repsample
