#pragma once

// JSON configuration shared by the CLI and the experiment harness:
//   {"features": [{"name", "kind", "categories"?, "role"}],
//    "filters":  [{"feature", "op": gt|ge|lt|le|eq|in, "value"}]}

#include <filesystem>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "repsample/dataset.hpp"

namespace repsample {

struct DataConfig {
  Schema schema;
  std::vector<FilterRule> filters;
};

nlohmann::json load_json(const std::filesystem::path& path);

Schema parse_schema(const nlohmann::json& features);
FilterRule parse_filter(const nlohmann::json& j, const Schema& schema);
DataConfig parse_data_config(const nlohmann::json& j);

/// Schema of the preprocessed income data: AGEP and WKHP continuous; COW,
/// SCHL, MAR, POBP, RELP binary ("0"/"1"); SEX binary ("1"/"2"); RAC1P
/// categorical "1".."9" and protected; PINCP the target. Filters keep
/// AGEP > 16, WKHP >= 1 and PINCP >= 100.
DataConfig income_data_config();

/// Guesses a schema from a CSV header and body: a column whose cells all
/// parse as numbers and that has more than `max_categories` distinct values
/// is continuous; other columns are categorical (binary with two labels),
/// categories sorted numerically when numeric, lexically otherwise.
Schema infer_schema(std::string_view csv_text, std::size_t max_categories = 20);

nlohmann::json to_json(const Schema& schema);
nlohmann::json to_json(const FilterRule& rule);

}  // namespace repsample
