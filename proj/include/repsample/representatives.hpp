#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repsample/dataset.hpp"

namespace repsample {

enum class CenterMode { mean, median };

struct GroupRepresentative {
  std::vector<std::string> group_key;  // category label per group-by feature
  std::size_t size = 0;
  // Per model-input feature: mean (or median) for continuous features, mode
  // label for categorical ones, in schema order.
  std::vector<std::pair<std::string, nlohmann::json>> center;
  std::size_t medoid_index = 0;  // dataset row closest to the center
  double dispersion = 0.0;       // mean squared distance to the center
};

/// One representative per nonempty group. Distances are measured in the
/// rows of `fm` (which must align with `ds`); the encoded center is the
/// column mean, or for CenterMode::median the coordinate-wise median of
/// continuous columns with the mode's indicator pattern for categoricals.
/// Medoid ties go to the lowest row index.
std::vector<GroupRepresentative> compute_representatives(const TabularDataset& ds,
                                                         std::span<const std::string> group_by,
                                                         const FeatureMatrix& fm,
                                                         CenterMode mode = CenterMode::mean);

nlohmann::json to_json(const GroupRepresentative& rep);

}  // namespace repsample
