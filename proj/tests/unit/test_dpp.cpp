#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "repsample/dpp.hpp"
#include "repsample/error.hpp"

using namespace repsample;

namespace {

TabularDataset rows_of(std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = double(i);
  return fixture::line(x);
}

std::size_t subset_rank(std::vector<std::size_t> s, const std::vector<std::vector<std::size_t>>& all) {
  std::sort(s.begin(), s.end());
  return static_cast<std::size_t>(std::lower_bound(all.begin(), all.end(), s) - all.begin());
}

}  // namespace

TEST_SUITE("dpp") {

TEST_CASE("elementary symmetric polynomials") {
  const double v[] = {1, 2, 3};
  const auto e = elementary_symmetric(v, 3);
  CHECK(e[0] == 1.0);
  CHECK(e[1] == 6.0);
  CHECK(e[2] == 11.0);
  CHECK(e[3] == 6.0);
}

TEST_CASE("dual kernel eigen-decomposition reconstructs C") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd items(40, 6);
  for (Eigen::Index i = 0; i < items.size(); ++i) items.data()[i] = n01(rng);
  const DppKernel k = build_dpp_kernel(items);
  const Eigen::MatrixXd c = items.transpose() * items;
  const Eigen::MatrixXd rec = k.eigenvectors * k.eigenvalues.asDiagonal() * k.eigenvectors.transpose();
  CHECK((rec - c).cwiseAbs().maxCoeff() < 1e-8 * c.cwiseAbs().maxCoeff());
  CHECK(k.effective_rank == 6);
  for (Eigen::Index i = 1; i < k.eigenvalues.size(); ++i) CHECK(k.eigenvalues[i] <= k.eigenvalues[i - 1]);
  CHECK(k.eigenvalues.minCoeff() >= 0.0);
}

TEST_CASE("orthonormal items: every pair is equally likely") {
  const TabularDataset ds = rows_of(4);
  const DppKernel kernel = build_dpp_kernel(Eigen::MatrixXd::Identity(4, 4));
  const auto pairs = oracle::subsets(4, 2);
  std::vector<double> freq(pairs.size(), 0.0);
  const int draws = 60000;
  for (int s = 0; s < draws; ++s) {
    freq[subset_rank(sample_kdpp(ds, kernel, 2, std::uint64_t(s)).indices, pairs)] += 1.0;
  }
  double tv = 0.0;
  for (double f : freq) tv += std::fabs(f / draws - 1.0 / 6);
  CHECK(0.5 * tv < 0.02);
}

TEST_CASE("duplicate items never appear together") {
  Eigen::MatrixXd items(5, 3);
  items << 1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 1, 1, 1, 1;
  const TabularDataset ds = rows_of(5);
  const DppKernel kernel = build_dpp_kernel(items);
  for (int s = 0; s < 3000; ++s) {
    const auto idx = sample_kdpp(ds, kernel, 3, std::uint64_t(s)).indices;
    const std::set<std::size_t> chosen(idx.begin(), idx.end());
    CHECK(chosen.size() == 3);
    CHECK_FALSE((chosen.count(0) && chosen.count(2)));
  }
}

TEST_CASE("subset frequencies follow det(L_S)") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n01;
  const std::size_t n = 6;
  const std::size_t p = 4;
  Eigen::MatrixXd items(n, p);
  for (Eigen::Index i = 0; i < items.size(); ++i) items.data()[i] = n01(rng);
  const TabularDataset ds = rows_of(n);
  const DppKernel kernel = build_dpp_kernel(items);
  const Eigen::MatrixXd l = items * items.transpose();
  for (std::size_t k : {1, 2, 3}) {
    const auto sets = oracle::subsets(n, k);
    const auto probs = oracle::kdpp_probabilities(l, sets);
    std::vector<double> freq(sets.size(), 0.0);
    const int draws = 20000;
    for (int s = 0; s < draws; ++s) {
      freq[subset_rank(sample_kdpp(ds, kernel, k, derive_seed(k, {std::uint64_t(s)})).indices, sets)] += 1.0;
    }
    CHECK(oracle::chi_square_p(freq, probs, draws) > 0.001);
  }
}

TEST_CASE("k beyond the kernel rank is refused") {
  const TabularDataset ds = rows_of(5);
  Eigen::MatrixXd items = Eigen::MatrixXd::Zero(5, 2);
  items(0, 0) = 1;
  items(1, 1) = 1;
  items(2, 0) = 2;
  const DppKernel kernel = build_dpp_kernel(items);
  CHECK(kernel.effective_rank == 2);
  CHECK_THROWS_AS(sample_kdpp(ds, kernel, 3, 1), ConfigError);
}

TEST_CASE("batched draws give distinct rows of the requested size") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  std::vector<double> x(300);
  for (double& v : x) v = n01(rng);
  const TabularDataset ds = fixture::line(x);
  const FeatureMatrix fm = encode_matrix(ds, true);
  // One column means rank one, so each batch adds one row.
  const SampleIndex s = sample_kdpp_batched(ds, fm, 25, 3);
  CHECK(s.indices.size() == 25);
  CHECK(std::set<std::size_t>(s.indices.begin(), s.indices.end()).size() == 25);
  CHECK(sample_kdpp_batched(ds, fm, 25, 3).indices == s.indices);
  CHECK_THROWS_AS(sample_kdpp_batched(ds, fm, 301, 3), ConfigError);
}

TEST_CASE("eigen-subset selection survives large spectra") {
  std::vector<double> big{1e200, 3e199, 5e150, 1e-100, 2.0};
  Rng rng(5);
  for (int s = 0; s < 100; ++s) {
    const auto j = select_eigen_subset(big, 2, rng);
    CHECK(j.size() == 2);
    CHECK(std::set<std::size_t>(j.begin(), j.end()).size() == 2);
  }
}

}
