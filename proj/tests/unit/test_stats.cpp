#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "repsample/stats.hpp"

using namespace repsample;

TEST_SUITE("stats") {

TEST_CASE("paired t example") {
  const std::vector<double> a{1.5, 2.5, 2.0, 3.0, 1.0};
  const std::vector<double> b{1.0, 1.0, 1.0, 1.0, 1.0};
  const TTestResult r = paired_t_test(a, b);
  CHECK(r.t == doctest::Approx(2.83).epsilon(0.01 / 2.83));
  CHECK(r.df == 4.0);
  CHECK(r.mean_diff == doctest::Approx(1.0));
  CHECK(r.p_value == doctest::Approx(0.047).epsilon(0.02));
  // Independent oracle: the t distribution tail at the hand statistic.
  const double t = 1.0 / (std::sqrt(0.625) / std::sqrt(5.0));
  boost::math::students_t dist(4.0);
  CHECK(r.p_value == doctest::Approx(2.0 * boost::math::cdf(boost::math::complement(dist, t))).epsilon(1e-12));
}

TEST_CASE("paired t conventions") {
  const std::vector<double> a{1, 2, 3};
  CHECK(paired_t_test(a, a).p_value == 1.0);
  const std::vector<double> b{0, 1, 2};
  CHECK(paired_t_test(a, b).p_value == 0.0);
}

TEST_CASE("BH examples") {
  const std::vector<double> p{0.005, 0.01, 0.03, 0.04};
  CHECK(bh_adjust(p) == std::vector<double>{0.02, 0.02, 0.04, 0.04});
  CHECK(bh_adjust(std::vector<double>{0.3}) == std::vector<double>{0.3});
  CHECK(bh_adjust(std::vector<double>{0.2, 0.2, 0.2}) == std::vector<double>{0.2, 0.2, 0.2});
}

TEST_CASE("BH matches the textbook definition") {
  std::mt19937_64 rng(70);
  std::uniform_real_distribution<double> u;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(1 + rng() % 15);
    for (double& x : p) x = u(rng) < 0.2 ? u(rng) * 0.01 : u(rng);
    if (p.size() > 2) p[1] = p[0];  // ties
    const auto adj = bh_adjust(p);
    const auto ref = oracle::bh_reference(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(adj[i] == doctest::Approx(ref[i]).epsilon(1e-14));
      CHECK(adj[i] >= p[i]);
      CHECK(adj[i] <= 1.0);
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[i] <= p[j]) CHECK(adj[i] <= adj[j]);
      }
    }
  }
}

TEST_CASE("mean and sd") {
  const std::vector<double> x{2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(mean(x) == 5.0);
  CHECK(sample_sd(x) == doctest::Approx(std::sqrt(32.0 / 7)));
  CHECK(sample_sd(std::vector<double>{3}) == 0.0);
}

}
