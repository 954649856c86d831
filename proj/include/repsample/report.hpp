#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repsample/dataset.hpp"

namespace repsample {

struct MetricReport {
  MetricReport() = default;
  MetricReport(std::string metric_name, std::string feature_name, double v)
      : metric(std::move(metric_name)), feature(std::move(feature_name)), value(v) {}

  std::string metric;   // e.g. "wasserstein1", "combinatorial_diversity"
  std::string feature;  // empty when the metric is not per-feature
  double value = 0.0;
  std::optional<double> sd;         // spread across folds or repetitions
  std::vector<std::string> groups;  // group labels the value refers to
  std::string sample;               // sample or condition label
  std::optional<Provenance> provenance;
  nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const MetricReport& r);
nlohmann::json to_json(std::span<const MetricReport> reports);
// Inverse of to_json; null values read back as NaN.
MetricReport metric_report_from_json(const nlohmann::json& j);

// Columns: metric,feature,sample,groups,value,sd
void write_csv(std::span<const MetricReport> reports, std::ostream& out);

// JSON numbers cannot hold NaN or infinities; those become null.
nlohmann::json json_number(double v);

}  // namespace repsample
