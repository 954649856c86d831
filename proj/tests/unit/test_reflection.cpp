#include <cmath>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "repsample/error.hpp"
#include "repsample/reflection.hpp"
#include "repsample/samplers.hpp"

using namespace repsample;

namespace {

std::vector<double> random_support(std::mt19937_64& rng, std::size_t max_points = 6) {
  std::uniform_int_distribution<std::size_t> size(1, max_points);
  std::uniform_int_distribution<int> grid(-5, 5);
  std::vector<double> v(size(rng));
  // Integer grid with a random scale: ties between the two supports are common.
  const double scale = 0.5 + double(rng() % 4);
  for (double& x : v) x = scale * grid(rng);
  return v;
}

}  // namespace

TEST_SUITE("reflection") {

TEST_CASE("KS statistic examples") {
  const std::vector<double> a{0, 1, 2, 3};
  const std::vector<double> b{0, 1};
  CHECK(ks_statistic(a, b) == doctest::Approx(0.5));
  CHECK(ks_statistic(a, a) == 0.0);
  CHECK(ks_statistic(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 1.0);
  CHECK_THROWS_AS(ks_statistic(std::vector<double>{}, b), ConfigError);
}

TEST_CASE("KS is invariant under increasing transforms") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    auto a = random_support(rng, 12);
    auto b = random_support(rng, 12);
    const double before = ks_statistic(a, b);
    for (double& x : a) x = std::exp(0.3 * x) + 7;
    for (double& x : b) x = std::exp(0.3 * x) + 7;
    CHECK(ks_statistic(a, b) == doctest::Approx(before).epsilon(1e-12));
    CHECK(before >= 0.0);
    CHECK(before <= 1.0);
  }
}

TEST_CASE("W1 examples") {
  CHECK(wasserstein1(std::vector<double>{0, 1}, std::vector<double>{1, 2}) == doctest::Approx(1.0));
  CHECK(wasserstein1(std::vector<double>{0}, std::vector<double>{3.5}) == doctest::Approx(3.5));
  CHECK(wasserstein1(std::vector<double>{4, 1, 2}, std::vector<double>{1, 2, 4}) == 0.0);
}

TEST_CASE("W1 agrees with the transport LP and is a metric") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 100; ++t) {
    const auto a = random_support(rng);
    const auto b = random_support(rng);
    const auto c = random_support(rng);
    const double ab = wasserstein1(a, b);
    CHECK(std::fabs(ab - oracle::transport_lp(a, b)) < 1e-9);
    CHECK(std::fabs(ab - wasserstein1(b, a)) < 1e-12);
    CHECK(ab <= wasserstein1(a, c) + wasserstein1(c, b) + 1e-12);
    auto a2 = a;
    auto b2 = b;
    for (double& x : a2) x += 3.25;
    for (double& x : b2) x += 3.25;
    CHECK(std::fabs(wasserstein1(a2, b2) - ab) < 1e-9);
  }
}

TEST_CASE("categorical W1 compares at numeric category positions") {
  const double positions[] = {1, 2, 9};
  const std::int32_t a[] = {0, 0, 1, 2};
  const std::int32_t b[] = {0, 1, 1, 1};
  const auto da = EmpiricalDistribution1D::from_codes(a, positions);
  const auto db = EmpiricalDistribution1D::from_codes(b, positions);
  const std::vector<double> va{1, 1, 2, 9};
  const std::vector<double> vb{1, 2, 2, 2};
  CHECK(wasserstein1(da, db) == doctest::Approx(oracle::transport_lp(va, vb)).epsilon(1e-12));
  CHECK(ks_statistic(da, db) == doctest::Approx(ks_statistic(va, vb)));
  CHECK_THROWS_AS(wasserstein1(da, EmpiricalDistribution1D::from_values(va)), ConfigError);
}

TEST_CASE("Welch mean comparison") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{2, 3, 4, 5, 6};
  const TTestResult r = mean_comparison(a, b);
  // Textbook Welch: equal variances 2.5 and n = 5 give se = 1, df = 8.
  CHECK(r.t == doctest::Approx(-1.0));
  CHECK(r.df == doctest::Approx(8.0));
  boost::math::students_t dist(8.0);
  CHECK(r.p_value == doctest::Approx(2 * boost::math::cdf(dist, -1.0)).epsilon(1e-10));
  CHECK(r.mean_diff == doctest::Approx(-1.0));

  CHECK(mean_comparison(a, a).p_value == doctest::Approx(1.0));
  CHECK(mean_comparison(std::vector<double>{0, 0, 0, 0}, std::vector<double>{1, 1, 1, 1}).p_value == 0.0);
  CHECK(mean_comparison(std::vector<double>{2, 2}, std::vector<double>{2, 2, 2}).p_value == 1.0);
}

TEST_CASE("report: stratified race marginal reflects the population exactly") {
  std::mt19937_64 rng(6);
  std::discrete_distribution<int> race({60, 20, 10, 5, 3, 2});
  std::normal_distribution<double> n01;
  const std::size_t n = 2000;
  std::vector<double> x(n);
  std::vector<std::int32_t> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = n01(rng);
    r[i] = race(rng);
  }
  Schema s({fixture::continuous("x"), fixture::categorical("race", {"1", "2", "3", "4", "5", "6"})});
  const TabularDataset pop(s, {fixture::reals(x), fixture::codes(r)}, "pop");
  const std::vector<StrataKey> keys{{"race", {}}};
  const SampleIndex st = sample_stratified(pop, build_strata(pop, keys), 500, 4);
  const std::vector<std::string> features{"race"};
  const auto reports = reflection_report(extract(pop, st), pop, features, "miniature");
  bool saw_w1 = false;
  for (const auto& m : reports) {
    if (m.metric != "wasserstein1") continue;
    saw_w1 = true;
    // Largest-remainder rounding leaves at most 1/size of mass per category.
    CHECK(m.value < 6.0 / 500);
  }
  CHECK(saw_w1);
  for (const auto& m : reflection_report(pop, pop, {}, "self")) {
    if (m.metric == "wasserstein1" || m.metric == "ks") CHECK(m.value == 0.0);
  }
}

}
