#pragma once

// k-DPP sampling with the linear L-ensemble L = D D^T over the encoded rows,
// carried out through the p x p dual matrix C = D^T D so that the cost is
// linear in the number of rows.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "repsample/dataset.hpp"
#include "repsample/random.hpp"

namespace repsample {

struct DppKernel {
  Eigen::MatrixXd items;         // n x p; row i is the feature vector of item i
  Eigen::MatrixXd dual_matrix;   // p x p, sum over items of x x^T
  Eigen::VectorXd eigenvalues;   // nonincreasing, clamped at zero
  Eigen::MatrixXd eigenvectors;  // p x p, orthonormal columns
  double rank_tolerance = 0.0;   // eigenvalues at or below this count as zero
  std::size_t effective_rank = 0;
};

DppKernel build_dpp_kernel(const FeatureMatrix& fm);
DppKernel build_dpp_kernel(Eigen::MatrixXd items);

/// e_0 .. e_{k_max} of `values`. Plain recurrence without rescaling; meant
/// for small inputs and diagnostics.
std::vector<double> elementary_symmetric(std::span<const double> values, std::size_t k_max);

/// Draws a size-k subset J of eigen-indices with P(J) proportional to the
/// product of the selected eigenvalues. The elementary symmetric table is
/// rescaled per column so large spectra neither overflow nor underflow.
std::vector<std::size_t> select_eigen_subset(std::span<const double> eigenvalues, std::size_t k, Rng& rng);

/// Exact k-DPP draw: P(S) proportional to det(L_S) for |S| = k. Requires
/// k <= effective rank; throws ConfigError otherwise.
SampleIndex sample_kdpp(const TabularDataset& ds, const DppKernel& kernel, std::size_t k, std::uint64_t seed);

/// Coverage sample larger than the kernel rank: repeated exact k-DPP draws
/// (k = min(batch, rank of the remaining rows)) over the rows not yet
/// selected. `batch` = 0 uses the full remaining rank.
SampleIndex sample_kdpp_batched(const TabularDataset& ds, const FeatureMatrix& fm, std::size_t size,
                                std::uint64_t seed, std::size_t batch = 0);

}  // namespace repsample
