#include "repsample/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "repsample/csv.hpp"
#include "repsample/error.hpp"

namespace repsample {

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::continuous:
      return "continuous";
    case FeatureKind::binary:
      return "binary";
    case FeatureKind::categorical:
      return "categorical";
  }
  return "?";
}

std::string_view to_string(FeatureRole role) {
  switch (role) {
    case FeatureRole::input:
      return "input";
    case FeatureRole::target:
      return "target";
    case FeatureRole::protected_attribute:
      return "protected";
    case FeatureRole::ignored:
      return "ignored";
  }
  return "?";
}

FeatureKind parse_feature_kind(std::string_view text) {
  if (text == "continuous") return FeatureKind::continuous;
  if (text == "binary") return FeatureKind::binary;
  if (text == "categorical") return FeatureKind::categorical;
  throw ConfigError("unknown feature kind '" + std::string(text) + "'");
}

FeatureRole parse_feature_role(std::string_view text) {
  if (text == "input") return FeatureRole::input;
  if (text == "target") return FeatureRole::target;
  if (text == "protected") return FeatureRole::protected_attribute;
  if (text == "ignored") return FeatureRole::ignored;
  throw ConfigError("unknown feature role '" + std::string(text) + "'");
}

namespace {

std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string fingerprint(const Schema& schema, const std::vector<Column>& columns) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (std::size_t j = 0; j < schema.size(); ++j) {
    mix(schema[j].name.data(), schema[j].name.size());
    const Column& c = columns[j];
    if (!c.real.empty()) mix(c.real.data(), c.real.size() * sizeof(double));
    if (!c.codes.empty()) mix(c.codes.data(), c.codes.size() * sizeof(std::int32_t));
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

}  // namespace

std::vector<double> FeatureSpec::category_positions() const {
  std::vector<double> pos(categories.size());
  bool numeric = true;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const auto v = parse_number(categories[c]);
    if (!v) {
      numeric = false;
      break;
    }
    pos[c] = *v;
  }
  if (!numeric) {
    for (std::size_t c = 0; c < categories.size(); ++c) pos[c] = static_cast<double>(c + 1);
  }
  return pos;
}

Schema::Schema(std::vector<FeatureSpec> features) : features_(std::move(features)) {
  for (std::size_t j = 0; j < features_.size(); ++j) {
    const FeatureSpec& f = features_[j];
    if (f.name.empty()) throw ConfigError("feature " + std::to_string(j) + " has no name");
    for (std::size_t k = 0; k < j; ++k) {
      if (features_[k].name == f.name) throw ConfigError("duplicate feature name '" + f.name + "'");
    }
    if (f.kind == FeatureKind::binary && f.categories.size() != 2) {
      throw ConfigError("binary feature '" + f.name + "' must declare exactly 2 categories");
    }
    if (f.kind == FeatureKind::categorical && f.categories.size() < 2) {
      throw ConfigError("categorical feature '" + f.name + "' must declare at least 2 categories");
    }
    if (f.kind == FeatureKind::continuous && !f.categories.empty()) {
      throw ConfigError("continuous feature '" + f.name + "' cannot declare categories");
    }
    for (std::size_t a = 0; a < f.categories.size(); ++a) {
      for (std::size_t b = 0; b < a; ++b) {
        if (f.categories[a] == f.categories[b]) {
          throw ConfigError("feature '" + f.name + "' repeats category '" + f.categories[a] + "'");
        }
      }
    }
    if (f.role == FeatureRole::target) {
      if (target_) throw ConfigError("more than one target feature ('" + features_[*target_].name +
                                     "', '" + f.name + "')");
      target_ = j;
    }
  }
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t j = 0; j < features_.size(); ++j) {
    if (features_[j].name == name) return j;
  }
  return std::nullopt;
}

std::size_t Schema::index_of(std::string_view name) const {
  if (auto j = find(name)) return *j;
  throw ConfigError("unknown feature '" + std::string(name) + "'");
}

TabularDataset::TabularDataset(Schema schema, std::vector<Column> columns, std::string source_id)
    : schema_(std::move(schema)), columns_(std::move(columns)), source_id_(std::move(source_id)) {
  if (columns_.size() != schema_.size()) {
    throw DataError("dataset has " + std::to_string(columns_.size()) + " columns but schema has " +
                    std::to_string(schema_.size()) + " features");
  }
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    const FeatureSpec& f = schema_[j];
    const Column& c = columns_[j];
    const std::size_t len = f.is_categorical() ? c.codes.size() : c.real.size();
    if (j == 0) n_rows_ = len;
    if (len != n_rows_) throw DataError("column '" + f.name + "' has inconsistent length");
    if (f.is_categorical()) {
      if (!c.real.empty()) throw DataError("categorical column '" + f.name + "' holds reals");
      for (std::int32_t code : c.codes) {
        if (code < 0 || static_cast<std::size_t>(code) >= f.categories.size()) {
          throw DataError("column '" + f.name + "' holds invalid category code " + std::to_string(code));
        }
      }
    } else {
      if (!c.codes.empty()) throw DataError("continuous column '" + f.name + "' holds codes");
      for (double v : c.real) {
        if (!std::isfinite(v)) throw DataError("column '" + f.name + "' holds a non-finite value");
      }
    }
  }
  id_ = fingerprint(schema_, columns_);
}

std::span<const double> TabularDataset::real(std::size_t j) const {
  if (schema_[j].is_categorical()) throw ConfigError("feature '" + schema_[j].name + "' is not continuous");
  return columns_[j].real;
}

std::span<const std::int32_t> TabularDataset::codes(std::size_t j) const {
  if (!schema_[j].is_categorical()) throw ConfigError("feature '" + schema_[j].name + "' is not categorical");
  return columns_[j].codes;
}

std::vector<double> TabularDataset::numeric_column(std::size_t j) const {
  const FeatureSpec& f = schema_[j];
  if (!f.is_categorical()) return columns_[j].real;
  const std::vector<double> pos = f.category_positions();
  std::vector<double> out(n_rows_);
  for (std::size_t i = 0; i < n_rows_; ++i) out[i] = pos[static_cast<std::size_t>(columns_[j].codes[i])];
  return out;
}

nlohmann::json to_json(const SampleIndex& s) {
  return {{"parent_id", s.parent_id},
          {"indices", s.indices},
          {"provenance",
           {{"sampler", s.provenance.sampler},
            {"seed", s.provenance.seed},
            {"parameters", s.provenance.parameters}}}};
}

SampleIndex sample_index_from_json(const nlohmann::json& j) {
  try {
    SampleIndex s;
    s.parent_id = j.at("parent_id").get<std::string>();
    s.indices = j.at("indices").get<std::vector<std::size_t>>();
    const auto& p = j.at("provenance");
    s.provenance.sampler = p.at("sampler").get<std::string>();
    s.provenance.seed = p.at("seed").get<std::uint64_t>();
    s.provenance.parameters = p.value("parameters", nlohmann::json::object());
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed sample document: ") + e.what());
  }
}

std::string FilterRule::describe() const {
  static constexpr std::string_view names[] = {"gt", "ge", "lt", "le", "eq", "in"};
  std::ostringstream out;
  out << feature << ' ' << names[static_cast<int>(op)] << ' ';
  if (!labels.empty()) {
    for (std::size_t i = 0; i < labels.size(); ++i) out << (i ? "," : "") << labels[i];
  } else {
    for (std::size_t i = 0; i < numbers.size(); ++i) out << (i ? "," : "") << numbers[i];
  }
  return out.str();
}

std::vector<std::vector<std::string>> parse_csv_records(std::string_view text,
                                                        std::vector<std::size_t>& line_of_record) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool record_has_content = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto end_field = [&] {
    fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    if (record_has_content || !fields.empty() || !field.empty()) {
      end_field();
      records.push_back(std::move(fields));
      line_of_record.push_back(record_line);
    }
    fields.clear();
    record_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) {
          throw DataError("malformed CSV: stray quote on line " + std::to_string(line));
        }
        in_quotes = true;
        field_started = true;
        record_has_content = true;
        break;
      case ',':
        end_field();
        record_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        record_line = line;
        break;
      default:
        if (!record_has_content && fields.empty() && field.empty()) record_line = line;
        field.push_back(c);
        field_started = true;
        record_has_content = true;
        break;
    }
  }
  if (in_quotes) throw DataError("malformed CSV: unterminated quoted field starting near line " +
                                 std::to_string(record_line));
  end_record();
  return records;
}

namespace {

bool passes(const FilterRule& rule, const FeatureSpec& spec, double value, std::int32_t code) {
  if (spec.is_categorical()) {
    const std::string& label = spec.categories[static_cast<std::size_t>(code)];
    switch (rule.op) {
      case FilterOp::eq:
      case FilterOp::in:
        return std::find(rule.labels.begin(), rule.labels.end(), label) != rule.labels.end();
      default:
        break;
    }
    // Ordered comparisons on categoricals use numeric positions.
    value = spec.category_positions()[static_cast<std::size_t>(code)];
  }
  const double t = rule.numbers.empty() ? 0.0 : rule.numbers.front();
  switch (rule.op) {
    case FilterOp::gt:
      return value > t;
    case FilterOp::ge:
      return value >= t;
    case FilterOp::lt:
      return value < t;
    case FilterOp::le:
      return value <= t;
    case FilterOp::eq:
      return value == t;
    case FilterOp::in:
      return std::find(rule.numbers.begin(), rule.numbers.end(), value) != rule.numbers.end();
  }
  return false;
}

}  // namespace

IngestResult ingest_csv_text(std::string_view text, const Schema& schema,
                             std::span<const FilterRule> filters, std::string source_id) {
  std::vector<std::size_t> lines;
  auto records = parse_csv_records(text, lines);
  if (records.empty()) throw DataError("CSV has no header row");

  const std::vector<std::string>& header = records.front();
  std::vector<std::size_t> col_of(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    auto it = std::find_if(header.begin(), header.end(),
                           [&](const std::string& h) { return trim(h) == schema[j].name; });
    if (it == header.end()) throw DataError("CSV header lacks feature '" + schema[j].name + "'");
    col_of[j] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::size_t> filter_feature(filters.size());
  for (std::size_t r = 0; r < filters.size(); ++r) filter_feature[r] = schema.index_of(filters[r].feature);

  IngestReport report;
  report.raw_rows = records.size() - 1;
  report.dropped_per_rule.reserve(filters.size());
  for (const FilterRule& rule : filters) report.dropped_per_rule.emplace_back(rule.describe(), 0);

  std::vector<Column> columns(schema.size());
  std::vector<double> row_real(schema.size());
  std::vector<std::int32_t> row_code(schema.size());

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::size_t data_row = r;  // 1-based data row number
    if (rec.size() != header.size()) {
      throw DataError("malformed CSV row " + std::to_string(data_row) + " (line " +
                      std::to_string(lines[r]) + "): expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(rec.size()));
    }
    bool missing = false;
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const std::string_view cell = trim(rec[col_of[j]]);
      const FeatureSpec& f = schema[j];
      if (cell.empty() || cell == "NA" || cell == "NaN") {
        missing = true;
        break;
      }
      if (f.is_categorical()) {
        auto it = std::find(f.categories.begin(), f.categories.end(), cell);
        if (it == f.categories.end()) {
          throw DataError("row " + std::to_string(data_row) + ": unknown category '" +
                          std::string(cell) + "' for feature '" + f.name + "'");
        }
        row_code[j] = static_cast<std::int32_t>(it - f.categories.begin());
      } else {
        const auto v = parse_number(cell);
        if (!v || !std::isfinite(*v)) {
          throw DataError("row " + std::to_string(data_row) + ": non-numeric value '" +
                          std::string(cell) + "' for feature '" + f.name + "'");
        }
        row_real[j] = *v;
      }
    }
    if (missing) {
      ++report.missing_rows;
      continue;
    }
    bool kept = true;
    for (std::size_t k = 0; k < filters.size(); ++k) {
      const std::size_t j = filter_feature[k];
      if (!passes(filters[k], schema[j], row_real[j], row_code[j])) {
        ++report.dropped_per_rule[k].second;
        kept = false;
        break;
      }
    }
    if (!kept) continue;
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (schema[j].is_categorical()) {
        columns[j].codes.push_back(row_code[j]);
      } else {
        columns[j].real.push_back(row_real[j]);
      }
    }
  }
  TabularDataset ds(schema, std::move(columns), std::move(source_id));
  report.kept_rows = ds.n_rows();
  return {std::move(ds), std::move(report)};
}

IngestResult ingest_csv(const std::filesystem::path& path, const Schema& schema,
                        std::span<const FilterRule> filters, std::string source_id) {
  if (source_id.empty()) source_id = path.stem().string();
  return ingest_csv_text(read_text_file(path.string()), schema, filters, std::move(source_id));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_csv(const TabularDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  const Schema& schema = ds.schema();
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q.push_back('"');
      q.push_back(c);
    }
    q.push_back('"');
    return q;
  };
  for (std::size_t j = 0; j < schema.size(); ++j) out << (j ? "," : "") << quote(schema[j].name);
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (j) out << ',';
      if (schema[j].is_categorical()) {
        out << quote(schema[j].categories[static_cast<std::size_t>(ds.column(j).codes[i])]);
      } else {
        // Shortest representation that round-trips exactly.
        const auto res = std::to_chars(buf, buf + sizeof buf, ds.column(j).real[i]);
        out.write(buf, res.ptr - buf);
      }
    }
    out << '\n';
  }
}

TabularDataset transform_target_log(const TabularDataset& ds) {
  const auto t = ds.schema().target_index();
  if (!t) throw ConfigError("dataset has no target feature");
  if (ds.schema()[*t].kind != FeatureKind::continuous) {
    throw ConfigError("log transform needs a continuous target");
  }
  std::vector<Column> cols;
  cols.reserve(ds.n_features());
  for (std::size_t j = 0; j < ds.n_features(); ++j) cols.push_back(ds.column(j));
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    double& v = cols[*t].real[i];
    if (!(v > 0.0)) {
      throw DataError("target value " + std::to_string(v) + " at row " + std::to_string(i) +
                      " is not positive; cannot take the logarithm");
    }
    v = std::log(v);
  }
  return TabularDataset(ds.schema(), std::move(cols), ds.source_id());
}

TabularDataset binarize_target(const TabularDataset& ds, double threshold) {
  const auto t = ds.schema().target_index();
  if (!t) throw ConfigError("dataset has no target feature");
  if (ds.schema()[*t].kind != FeatureKind::continuous) {
    throw ConfigError("binarization needs a continuous target");
  }
  std::vector<FeatureSpec> features = ds.schema().features();
  features[*t].kind = FeatureKind::binary;
  features[*t].categories = {"0", "1"};
  std::vector<Column> cols;
  for (std::size_t j = 0; j < ds.n_features(); ++j) cols.push_back(ds.column(j));
  Column& target = cols[*t];
  target.codes.resize(ds.n_rows());
  for (std::size_t i = 0; i < ds.n_rows(); ++i) target.codes[i] = target.real[i] >= threshold ? 1 : 0;
  target.real.clear();
  return TabularDataset(Schema(std::move(features)), std::move(cols), ds.source_id());
}

TabularDataset extract_rows(const TabularDataset& ds, std::span<const std::size_t> rows) {
  std::vector<Column> cols(ds.n_features());
  for (std::size_t j = 0; j < ds.n_features(); ++j) {
    const Column& src = ds.column(j);
    Column& dst = cols[j];
    if (ds.schema()[j].is_categorical()) {
      dst.codes.reserve(rows.size());
      for (std::size_t r : rows) {
        if (r >= ds.n_rows()) throw ConfigError("row index " + std::to_string(r) + " out of range");
        dst.codes.push_back(src.codes[r]);
      }
    } else {
      dst.real.reserve(rows.size());
      for (std::size_t r : rows) {
        if (r >= ds.n_rows()) throw ConfigError("row index " + std::to_string(r) + " out of range");
        dst.real.push_back(src.real[r]);
      }
    }
  }
  return TabularDataset(ds.schema(), std::move(cols), ds.source_id());
}

TabularDataset extract(const TabularDataset& ds, const SampleIndex& sample) {
  if (sample.parent_id != ds.id()) {
    throw ConfigError("sample belongs to dataset " + sample.parent_id + ", not " + ds.id());
  }
  return extract_rows(ds, sample.indices);
}

const ColumnSpan& FeatureMatrix::span_of(std::string_view feature) const {
  for (const auto& [name, span] : encoding_map) {
    if (name == feature) return span;
  }
  throw ConfigError("feature '" + std::string(feature) + "' is not encoded");
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  FeatureMatrix out;
  out.encoding_map = encoding_map;
  out.standardization = standardization;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    const double* src = values.col(c).data();
    double* dst = out.values.col(c).data();
    for (std::size_t i = 0; i < rows.size(); ++i) dst[i] = src[rows[i]];
  }
  return out;
}

FeatureMatrix encode_matrix(const TabularDataset& ds, bool standardize, const TabularDataset* fit_on) {
  const TabularDataset& ref = fit_on ? *fit_on : ds;
  if (fit_on && !(fit_on->schema() == ds.schema())) {
    throw ConfigError("encode_matrix: dataset and fitting population have different schemas");
  }
  const Schema& schema = ds.schema();
  FeatureMatrix fm;
  std::size_t p = 0;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const FeatureSpec& f = schema[j];
    if (!f.is_model_input()) continue;
    const std::size_t width = f.kind == FeatureKind::categorical ? f.categories.size() : 1;
    fm.encoding_map.emplace_back(f.name, ColumnSpan{p, width});
    p += width;
  }
  const auto n = static_cast<Eigen::Index>(ds.n_rows());
  fm.values.setZero(n, static_cast<Eigen::Index>(p));
  fm.standardization.assign(p, {0.0, 1.0});

  std::size_t block = 0;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const FeatureSpec& f = schema[j];
    if (!f.is_model_input()) continue;
    const ColumnSpan span = fm.encoding_map[block++].second;
    const auto col0 = static_cast<Eigen::Index>(span.first);
    switch (f.kind) {
      case FeatureKind::continuous: {
        const auto src = ds.real(j);
        double mean = 0.0;
        double sd = 1.0;
        if (standardize) {
          const auto fit = ref.real(j);
          const double m = static_cast<double>(fit.size());
          double s = 0.0;
          for (double v : fit) s += v;
          mean = fit.empty() ? 0.0 : s / m;
          double ss = 0.0;
          for (double v : fit) ss += (v - mean) * (v - mean);
          sd = fit.empty() ? 0.0 : std::sqrt(ss / m);
        }
        fm.standardization[span.first] = {mean, sd};
        double* dst = fm.values.col(col0).data();
        if (standardize && !(sd > 0.0)) {
          // Zero-variance column stays all-zero.
          break;
        }
        for (Eigen::Index i = 0; i < n; ++i) dst[i] = (src[static_cast<std::size_t>(i)] - mean) / sd;
        break;
      }
      case FeatureKind::binary: {
        const auto codes = ds.codes(j);
        double* dst = fm.values.col(col0).data();
        for (Eigen::Index i = 0; i < n; ++i) dst[i] = codes[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;
        break;
      }
      case FeatureKind::categorical: {
        const auto codes = ds.codes(j);
        for (Eigen::Index i = 0; i < n; ++i) {
          fm.values(i, col0 + codes[static_cast<std::size_t>(i)]) = 1.0;
        }
        break;
      }
    }
  }
  return fm;
}

Eigen::VectorXd target_vector(const TabularDataset& ds) {
  const auto t = ds.schema().target_index();
  if (!t) throw ConfigError("dataset has no target feature");
  const auto n = static_cast<Eigen::Index>(ds.n_rows());
  Eigen::VectorXd y(n);
  if (ds.schema()[*t].is_categorical()) {
    if (ds.schema()[*t].categories.size() != 2) throw ConfigError("classification target must be binary");
    const auto codes = ds.codes(*t);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = codes[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;
  } else {
    const auto vals = ds.real(*t);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = vals[static_cast<std::size_t>(i)];
  }
  return y;
}

}  // namespace repsample
