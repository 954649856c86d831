#include "repsample/dpp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "repsample/error.hpp"
#include "repsample/simd/kernels.hpp"

namespace repsample {
namespace {

constexpr double kRelativeRankTolerance = 1e-9;

struct Spectrum {
  Eigen::MatrixXd dual;
  Eigen::VectorXd values;   // nonincreasing
  Eigen::MatrixXd vectors;  // matching columns
  double tolerance = 0.0;
  std::size_t rank = 0;
};

Eigen::MatrixXd gram_of_columns(const Eigen::MatrixXd& x) {
  const simd::KernelTable& kern = simd::kernels();
  const Eigen::Index p = x.cols();
  const auto n = static_cast<std::size_t>(x.rows());
  Eigen::MatrixXd c(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = a; b < p; ++b) {
      const double v = kern.dot(x.col(a).data(), x.col(b).data(), n);
      c(a, b) = v;
      c(b, a) = v;
    }
  }
  return c;
}

Spectrum decompose(const Eigen::MatrixXd& x) {
  Spectrum s;
  s.dual = gram_of_columns(x);
  const Eigen::Index p = s.dual.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.dual);
  if (solver.info() != Eigen::Success) throw DataError("eigendecomposition of the dual kernel failed");
  s.values.resize(p);
  s.vectors.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    s.values[i] = std::max(0.0, solver.eigenvalues()[p - 1 - i]);
    s.vectors.col(i) = solver.eigenvectors().col(p - 1 - i);
  }
  const double top = p > 0 ? s.values[0] : 0.0;
  s.tolerance = kRelativeRankTolerance * std::max(1.0, top);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (s.values[i] > s.tolerance) ++s.rank;
  }
  return s;
}

std::size_t draw_from(std::span<const double> weights, double total, Rng& rng) {
  const double target = uniform01(rng) * total;
  double run = 0.0;
  std::size_t last_positive = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    run += weights[i];
    last_positive = i;
    if (target < run) return i;
  }
  return last_positive;  // rounding at the top end
}

// Projection sampling for the elementary DPP spanned by the chosen
// eigenvectors. Works entirely in dual coordinates: the item-space
// projector is X M X^T with M = sum_j v_j v_j^T / lambda_j, and conditioning
// on item i is the rank-one update M -= a a^T / (x_i^T a), a = M x_i.
std::vector<std::size_t> sample_elementary(const Eigen::MatrixXd& x, const Spectrum& spec,
                                           std::span<const std::size_t> chosen, Rng& rng) {
  const simd::KernelTable& kern = simd::kernels();
  const auto n = static_cast<std::size_t>(x.rows());
  const Eigen::Index p = x.cols();
  const auto k = static_cast<Eigen::Index>(chosen.size());

  Eigen::MatrixXd basis(p, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto j = static_cast<Eigen::Index>(chosen[static_cast<std::size_t>(c)]);
    basis.col(c) = spec.vectors.col(j) / std::sqrt(spec.values[j]);
  }
  Eigen::MatrixXd m = basis * basis.transpose();
  const Eigen::MatrixXd y = x * basis;
  std::vector<double> prob(n, 0.0);
  for (Eigen::Index c = 0; c < k; ++c) kern.add_squared_diff(prob.data(), y.col(c).data(), 0.0, n);

  std::vector<std::size_t> out;
  out.reserve(chosen.size());
  std::vector<double> proj(n);
  Eigen::VectorXd xi(p);
  for (Eigen::Index step = 0; step < k; ++step) {
    const double total = std::accumulate(prob.begin(), prob.end(), 0.0);
    if (!(total > 0.0)) break;
    const std::size_t i = draw_from(prob, total, rng);
    out.push_back(i);
    xi = x.row(static_cast<Eigen::Index>(i)).transpose();
    const Eigen::VectorXd a = m * xi;
    const double s = xi.dot(a);
    prob[i] = 0.0;
    if (!(s > 0.0) || step + 1 == k) continue;
    std::fill(proj.begin(), proj.end(), 0.0);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (a[j] != 0.0) kern.axpy(proj.data(), a[j], x.col(j).data(), n);
    }
    kern.sub_scaled_squares(prob.data(), proj.data(), 1.0 / s, n);
    m.noalias() -= a * a.transpose() / s;
    for (std::size_t sel : out) prob[sel] = 0.0;
  }
  return out;
}

std::vector<std::size_t> kdpp_core(const Eigen::MatrixXd& x, const Spectrum& spec, std::size_t k, Rng& rng) {
  std::vector<double> lambda(spec.rank);
  for (std::size_t i = 0; i < spec.rank; ++i) lambda[i] = spec.values[static_cast<Eigen::Index>(i)];
  const std::vector<std::size_t> chosen = select_eigen_subset(lambda, k, rng);
  return sample_elementary(x, spec, chosen, rng);
}

}  // namespace

DppKernel build_dpp_kernel(Eigen::MatrixXd items) {
  Spectrum s = decompose(items);
  DppKernel kernel;
  kernel.items = std::move(items);
  kernel.dual_matrix = std::move(s.dual);
  kernel.eigenvalues = std::move(s.values);
  kernel.eigenvectors = std::move(s.vectors);
  kernel.rank_tolerance = s.tolerance;
  kernel.effective_rank = s.rank;
  return kernel;
}

DppKernel build_dpp_kernel(const FeatureMatrix& fm) { return build_dpp_kernel(fm.values); }

std::vector<double> elementary_symmetric(std::span<const double> values, std::size_t k_max) {
  std::vector<double> e(k_max + 1, 0.0);
  e[0] = 1.0;
  for (double v : values) {
    for (std::size_t l = k_max; l >= 1; --l) e[l] += v * e[l - 1];
  }
  return e;
}

std::vector<std::size_t> select_eigen_subset(std::span<const double> eigenvalues, std::size_t k, Rng& rng) {
  const std::size_t n = eigenvalues.size();
  if (k > n) throw ConfigError("cannot choose " + std::to_string(k) + " of " + std::to_string(n) + " eigenvalues");
  if (k == 0) return {};
  for (double v : eigenvalues) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("eigen-subset selection needs positive eigenvalues");
  }
  // table[m][l] = e_l(lambda_1..lambda_m) / S_m, where the column scale S_m
  // is accumulated through step factors c_m.
  std::vector<std::vector<double>> table(n + 1, std::vector<double>(k + 1, 0.0));
  std::vector<double> step_scale(n + 1, 1.0);
  table[0][0] = 1.0;
  for (std::size_t m = 1; m <= n; ++m) {
    const double lambda = eigenvalues[m - 1];
    std::vector<double>& col = table[m];
    col[0] = table[m - 1][0];
    for (std::size_t l = 1; l <= k; ++l) col[l] = table[m - 1][l] + lambda * table[m - 1][l - 1];
    const double c = *std::max_element(col.begin(), col.end());
    for (double& v : col) v /= c;
    step_scale[m] = c;
  }

  std::vector<std::size_t> chosen;
  std::size_t remaining = k;
  for (std::size_t m = n; m >= 1 && remaining > 0; --m) {
    if (remaining == m) {
      // Every remaining eigenvalue must be taken.
      for (std::size_t q = m; q >= 1; --q) chosen.push_back(q - 1);
      break;
    }
    const double denom = table[m][remaining] * step_scale[m];
    const double ratio = eigenvalues[m - 1] * table[m - 1][remaining - 1] / denom;
    if (uniform01(rng) < ratio) {
      chosen.push_back(m - 1);
      --remaining;
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

SampleIndex sample_kdpp(const TabularDataset& ds, const DppKernel& kernel, std::size_t k, std::uint64_t seed) {
  if (static_cast<std::size_t>(kernel.items.rows()) != ds.n_rows()) {
    throw ConfigError("DPP kernel was built for a dataset with a different number of rows");
  }
  if (k > kernel.effective_rank) {
    throw ConfigError("k-DPP of size " + std::to_string(k) + " is impossible: the linear kernel has effective rank " +
                      std::to_string(kernel.effective_rank) + " (p = " + std::to_string(kernel.items.cols()) +
                      "), so every larger subset has det(L_S) = 0");
  }
  Spectrum spec{kernel.dual_matrix, kernel.eigenvalues, kernel.eigenvectors, kernel.rank_tolerance,
                kernel.effective_rank};
  Rng rng(seed);
  std::vector<std::size_t> picked = kdpp_core(kernel.items, spec, k, rng);
  return {ds.id(), std::move(picked),
          {"kdpp", seed, {{"k", k}, {"kernel", "linear"}, {"effective_rank", kernel.effective_rank}}}};
}

SampleIndex sample_kdpp_batched(const TabularDataset& ds, const FeatureMatrix& fm, std::size_t size,
                                std::uint64_t seed, std::size_t batch) {
  const std::size_t n = ds.n_rows();
  if (fm.rows() != n) throw ConfigError("feature matrix does not match the dataset");
  if (size > n) {
    throw ConfigError("sample size " + std::to_string(size) + " exceeds population size " + std::to_string(n));
  }
  Rng rng(seed);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<std::size_t> out;
  out.reserve(size);
  std::size_t rounds = 0;
  std::size_t random_fill = 0;
  Eigen::MatrixXd x = fm.values;

  while (out.size() < size) {
    const Spectrum spec = decompose(x);
    std::size_t want = std::min(size - out.size(), spec.rank);
    if (batch > 0) want = std::min(want, batch);
    std::vector<std::size_t> local;
    if (want == 0) {
      // Remaining rows span nothing; fill uniformly.
      std::vector<std::size_t> idx(pool.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      const std::size_t need = size - out.size();
      for (std::size_t i = 0; i < need; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
      }
      local.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(need));
      random_fill += need;
    } else {
      local = kdpp_core(x, spec, want, rng);
    }
    ++rounds;
    std::vector<char> taken(pool.size(), 0);
    for (std::size_t l : local) {
      out.push_back(pool[l]);
      taken[l] = 1;
    }
    std::vector<std::size_t> keep;
    keep.reserve(pool.size() - local.size());
    for (std::size_t r = 0; r < pool.size(); ++r) {
      if (!taken[r]) keep.push_back(r);
    }
    Eigen::MatrixXd next(static_cast<Eigen::Index>(keep.size()), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double* src = x.col(c).data();
      double* dst = next.col(c).data();
      for (std::size_t r = 0; r < keep.size(); ++r) dst[r] = src[keep[r]];
    }
    std::vector<std::size_t> next_pool(keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r) next_pool[r] = pool[keep[r]];
    pool = std::move(next_pool);
    x = std::move(next);
  }
  return {ds.id(), std::move(out),
          {"kdpp", seed,
           {{"size", size}, {"kernel", "linear"}, {"batch", batch}, {"rounds", rounds}, {"random_fill", random_fill}}}};
}

}  // namespace repsample
