#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "repsample/error.hpp"
#include "repsample/representatives.hpp"

using namespace repsample;

namespace {

TabularDataset grouped(std::vector<double> x, std::vector<std::int32_t> g) {
  Schema s({fixture::continuous("x"), fixture::categorical("g", {"a", "b"}, FeatureRole::ignored)});
  return TabularDataset(s, {fixture::reals(std::move(x)), fixture::codes(std::move(g))}, "grp");
}

}  // namespace

TEST_SUITE("representatives") {

TEST_CASE("mean center, dispersion and medoid by hand") {
  const TabularDataset ds = grouped({0, 2, 0, 2, 10}, {0, 0, 1, 1, 1});
  const FeatureMatrix fm = encode_matrix(ds, false);
  const std::vector<std::string> by{"g"};
  const auto reps = compute_representatives(ds, by, fm);
  REQUIRE(reps.size() == 2);
  CHECK(reps[0].group_key == std::vector<std::string>{"a"});
  CHECK(reps[0].size == 2);
  CHECK(reps[0].center[0].second.get<double>() == doctest::Approx(1.0));
  CHECK(reps[0].dispersion == doctest::Approx(1.0));
  // Tie between rows 0 and 1; the lower index wins.
  CHECK(reps[0].medoid_index == 0);
  // {0, 2, 10}: center 4, nearest member 2.
  CHECK(reps[1].center[0].second.get<double>() == doctest::Approx(4.0));
  CHECK(reps[1].medoid_index == 3);
}

TEST_CASE("identical rows have zero dispersion") {
  const TabularDataset ds = grouped({5, 5, 5}, {1, 1, 1});
  const auto reps = compute_representatives(ds, std::vector<std::string>{"g"}, encode_matrix(ds, false));
  REQUIRE(reps.size() == 1);
  CHECK(reps[0].dispersion == 0.0);
  CHECK(reps[0].center[0].second.get<double>() == 5.0);
}

TEST_CASE("median center") {
  const TabularDataset ds = grouped({0, 1, 100}, {0, 0, 0});
  const auto reps =
      compute_representatives(ds, std::vector<std::string>{"g"}, encode_matrix(ds, false), CenterMode::median);
  CHECK(reps[0].center[0].second.get<double>() == 1.0);
  CHECK(reps[0].medoid_index == 1);
}

TEST_CASE("properties on random groups") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  std::vector<double> x(50);
  std::vector<std::int32_t> g(50);
  for (std::size_t i = 0; i < 50; ++i) {
    x[i] = n01(rng);
    g[i] = std::int32_t(rng() % 2);
  }
  const TabularDataset ds = grouped(x, g);
  const FeatureMatrix fm = encode_matrix(ds, false);
  const auto reps = compute_representatives(ds, std::vector<std::string>{"g"}, fm);
  std::vector<double> shifted = x;
  for (double& v : shifted) v += 42.0;
  const TabularDataset moved = grouped(shifted, g);
  const auto reps2 = compute_representatives(moved, std::vector<std::string>{"g"}, encode_matrix(moved, false));
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const auto& r = reps[k];
    CHECK(r.dispersion >= 0.0);
    CHECK(g[r.medoid_index] == (r.group_key[0] == "a" ? 0 : 1));
    const double c = r.center[0].second.get<double>();
    for (std::size_t i = 0; i < 50; ++i) {
      if (g[i] != g[r.medoid_index]) continue;
      CHECK(std::fabs(x[r.medoid_index] - c) <= std::fabs(x[i] - c));
    }
    CHECK(reps2[k].dispersion == doctest::Approx(r.dispersion).epsilon(1e-9));
  }
}

TEST_CASE("empty dataset is rejected") {
  const TabularDataset ds = grouped({}, {});
  CHECK_THROWS_AS(compute_representatives(ds, std::vector<std::string>{"g"}, encode_matrix(ds, false)), ConfigError);
}

}
