#pragma once

// Schema-typed, column-oriented tabular data and its encoding into a real
// feature matrix.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace repsample {

enum class FeatureKind { continuous, binary, categorical };
enum class FeatureRole { input, target, protected_attribute, ignored };

std::string_view to_string(FeatureKind kind);
std::string_view to_string(FeatureRole role);
FeatureKind parse_feature_kind(std::string_view text);
FeatureRole parse_feature_role(std::string_view text);

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
  // Category labels in declared order; cell values are indices into this list.
  std::vector<std::string> categories;
  FeatureRole role = FeatureRole::input;

  bool is_categorical() const { return kind != FeatureKind::continuous; }
  // Protected attributes are model inputs as well.
  bool is_model_input() const {
    return role == FeatureRole::input || role == FeatureRole::protected_attribute;
  }
  // Numeric position of a category on the real line: the label's numeric
  // value when every label parses as a number, otherwise its 1-based index.
  std::vector<double> category_positions() const;

  bool operator==(const FeatureSpec&) const = default;
};

class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<FeatureSpec> features);

  const std::vector<FeatureSpec>& features() const { return features_; }
  std::size_t size() const { return features_.size(); }
  const FeatureSpec& operator[](std::size_t i) const { return features_[i]; }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws ConfigError
  std::optional<std::size_t> target_index() const { return target_; }

  bool operator==(const Schema& other) const { return features_ == other.features_; }

 private:
  std::vector<FeatureSpec> features_;
  std::optional<std::size_t> target_;
};

// One column: real values for continuous features, category codes otherwise.
struct Column {
  std::vector<double> real;
  std::vector<std::int32_t> codes;

  bool operator==(const Column&) const = default;
};

class TabularDataset {
 public:
  TabularDataset() = default;
  /// Validates column lengths, finiteness and category codes; throws
  /// DataError on violation.
  TabularDataset(Schema schema, std::vector<Column> columns, std::string source_id);

  const Schema& schema() const { return schema_; }
  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_features() const { return schema_.size(); }
  const std::string& source_id() const { return source_id_; }
  // Content fingerprint; SampleIndex::parent_id refers to it.
  const std::string& id() const { return id_; }

  const Column& column(std::size_t j) const { return columns_[j]; }
  std::span<const double> real(std::size_t j) const;
  std::span<const std::int32_t> codes(std::size_t j) const;
  // Cell as a real number; categorical cells map to category_positions().
  std::vector<double> numeric_column(std::size_t j) const;

  bool operator==(const TabularDataset& other) const {
    return schema_ == other.schema_ && columns_ == other.columns_;
  }

 private:
  Schema schema_;
  std::vector<Column> columns_;
  std::size_t n_rows_ = 0;
  std::string source_id_;
  std::string id_;
};

struct Provenance {
  std::string sampler;
  std::uint64_t seed = 0;
  nlohmann::json parameters = nlohmann::json::object();
};

struct SampleIndex {
  std::string parent_id;
  std::vector<std::size_t> indices;
  Provenance provenance;
};

nlohmann::json to_json(const SampleIndex& s);
SampleIndex sample_index_from_json(const nlohmann::json& j);

enum class FilterOp { gt, ge, lt, le, eq, in };

struct FilterRule {
  std::string feature;
  FilterOp op = FilterOp::gt;
  // Numeric threshold for continuous features; labels for categorical ones.
  std::vector<double> numbers;
  std::vector<std::string> labels;

  std::string describe() const;
};

struct IngestReport {
  std::size_t raw_rows = 0;
  std::size_t kept_rows = 0;
  std::size_t missing_rows = 0;
  // Rows dropped per rule, attributed to the first rule they fail.
  std::vector<std::pair<std::string, std::size_t>> dropped_per_rule;
};

struct IngestResult {
  TabularDataset dataset;
  IngestReport report;
};

/// Reads an RFC-4180 CSV whose header names every schema feature (extra
/// columns are ignored). Rows with an empty cell in a schema column count as
/// missing and are dropped. Malformed rows and unknown category labels throw
/// DataError naming the 1-based data row.
IngestResult ingest_csv(const std::filesystem::path& path, const Schema& schema,
                        std::span<const FilterRule> filters, std::string source_id = {});

/// Same as ingest_csv but over an in-memory CSV document.
IngestResult ingest_csv_text(std::string_view text, const Schema& schema,
                             std::span<const FilterRule> filters, std::string source_id);

void write_csv(const TabularDataset& ds, const std::filesystem::path& path);

/// Replaces the continuous target with its natural logarithm. Not idempotent:
/// a second application logs again.
TabularDataset transform_target_log(const TabularDataset& ds);

/// Replaces a continuous target with a 2-category one ("0" below the
/// threshold, "1" at or above it).
TabularDataset binarize_target(const TabularDataset& ds, double threshold);

/// Row subset in index order. Throws ConfigError when the sample belongs to a
/// different dataset or an index is out of range.
TabularDataset extract(const TabularDataset& ds, const SampleIndex& sample);
TabularDataset extract_rows(const TabularDataset& ds, std::span<const std::size_t> rows);

struct ColumnSpan {
  std::size_t first = 0;
  std::size_t count = 0;
};

struct FeatureMatrix {
  // n x p, column-major; one column per encoded feature.
  Eigen::MatrixXd values;
  // Feature name -> encoded column span, in schema order.
  std::vector<std::pair<std::string, ColumnSpan>> encoding_map;
  // (mean, std) per encoded column; (0, 1) for indicator columns.
  std::vector<std::pair<double, double>> standardization;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
  const ColumnSpan& span_of(std::string_view feature) const;
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
};

/// Encodes model-input features (roles input and protected). Continuous
/// columns are z-scored with population (1/n) statistics of `fit_on` (or of
/// `ds` itself), zero-variance columns become all-zero; binary features give
/// one 0/1 column (second category = 1); categorical features give one
/// indicator column per declared category.
FeatureMatrix encode_matrix(const TabularDataset& ds, bool standardize,
                            const TabularDataset* fit_on = nullptr);

/// Target column as reals (continuous) or 0/1 (binary target).
Eigen::VectorXd target_vector(const TabularDataset& ds);

}  // namespace repsample
