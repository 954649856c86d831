#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "repsample/dataset.hpp"

namespace fixture {

inline repsample::FeatureSpec continuous(std::string name, repsample::FeatureRole role = repsample::FeatureRole::input) {
  return {std::move(name), repsample::FeatureKind::continuous, {}, role};
}

inline repsample::FeatureSpec categorical(std::string name, std::vector<std::string> cats,
                                          repsample::FeatureRole role = repsample::FeatureRole::input) {
  const auto kind = cats.size() == 2 ? repsample::FeatureKind::binary : repsample::FeatureKind::categorical;
  return {std::move(name), kind, std::move(cats), role};
}

inline repsample::Column reals(std::vector<double> v) { return {std::move(v), {}}; }
inline repsample::Column codes(std::vector<std::int32_t> v) { return {{}, std::move(v)}; }

// Dataset with a single continuous input column.
inline repsample::TabularDataset line(std::vector<double> x) {
  return repsample::TabularDataset(repsample::Schema({continuous("x")}), {reals(std::move(x))}, "line");
}

}  // namespace fixture
