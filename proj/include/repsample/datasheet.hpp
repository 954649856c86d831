#pragma once

// Markdown datasheet for a sampling run: purpose, sampling methodology and
// evaluation, filled from sample provenance and computed metrics.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repsample/dataset.hpp"
#include "repsample/report.hpp"

namespace repsample {

struct DatasheetSample {
  std::string label;
  std::size_t size = 0;
  Provenance provenance;
};

struct DatasheetInput {
  std::string title = "Dataset sample";
  std::string purpose;            // supplied by the user
  std::string target_population;  // supplied by the user
  std::string source_id;
  std::size_t population_rows = 0;
  std::vector<DatasheetSample> samples;
  std::vector<MetricReport> metrics;
};

/// Reads a run description: {"title"?, "purpose", "target_population"?,
/// "data": {"source_id", "n_rows"}?, "samples": [sample index JSON or
/// {"label", "sample"}], "metrics": [metric report JSON]}. The summary.json
/// of `experiment cv` is accepted as well; its fold-0 sampling conditions
/// and summary metrics are used. Throws ConfigError when there is no
/// completed sampling run.
DatasheetInput parse_datasheet_input(const nlohmann::json& run);

/// Representativity concept a sampler follows: "reflection" or "coverage".
std::string representativity_concept(const std::string& sampler);

std::string emit_datasheet(const DatasheetInput& in);

}  // namespace repsample
