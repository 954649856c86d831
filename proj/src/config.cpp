#include "repsample/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>

#include "repsample/csv.hpp"
#include "repsample/error.hpp"

namespace repsample {

nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

Schema parse_schema(const nlohmann::json& features) {
  if (!features.is_array()) throw ConfigError("'features' must be an array");
  std::vector<FeatureSpec> specs;
  try {
    for (const auto& f : features) {
      FeatureSpec s;
      s.name = f.at("name").get<std::string>();
      s.kind = parse_feature_kind(f.at("kind").get<std::string>());
      s.role = parse_feature_role(f.value("role", std::string("input")));
      if (f.contains("categories")) {
        for (const auto& c : f.at("categories")) {
          s.categories.push_back(c.is_string() ? c.get<std::string>() : c.dump());
        }
      }
      specs.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed feature list: ") + e.what());
  }
  return Schema(std::move(specs));
}

FilterRule parse_filter(const nlohmann::json& j, const Schema& schema) {
  FilterRule rule;
  try {
    rule.feature = j.at("feature").get<std::string>();
    const std::string op = j.at("op").get<std::string>();
    if (op == "gt") rule.op = FilterOp::gt;
    else if (op == "ge") rule.op = FilterOp::ge;
    else if (op == "lt") rule.op = FilterOp::lt;
    else if (op == "le") rule.op = FilterOp::le;
    else if (op == "eq") rule.op = FilterOp::eq;
    else if (op == "in") rule.op = FilterOp::in;
    else throw ConfigError("unknown filter op '" + op + "'");

    const FeatureSpec& spec = schema[schema.index_of(rule.feature)];
    const auto& value = j.at("value");
    const bool as_labels = spec.is_categorical() && (rule.op == FilterOp::eq || rule.op == FilterOp::in);
    auto push = [&](const nlohmann::json& v) {
      if (as_labels) {
        rule.labels.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      } else {
        if (!v.is_number()) throw ConfigError("filter on '" + rule.feature + "' needs a numeric value");
        rule.numbers.push_back(v.get<double>());
      }
    };
    if (value.is_array()) {
      for (const auto& v : value) push(v);
    } else {
      push(value);
    }
    if (rule.op != FilterOp::in && rule.numbers.size() + rule.labels.size() != 1) {
      throw ConfigError("filter op '" + op + "' takes a single value");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed filter: ") + e.what());
  }
  return rule;
}

DataConfig parse_data_config(const nlohmann::json& j) {
  if (!j.contains("features")) throw ConfigError("config lacks 'features'");
  DataConfig cfg;
  cfg.schema = parse_schema(j.at("features"));
  if (j.contains("filters")) {
    for (const auto& f : j.at("filters")) cfg.filters.push_back(parse_filter(f, cfg.schema));
  }
  return cfg;
}

nlohmann::json to_json(const Schema& schema) {
  nlohmann::json out = nlohmann::json::array();
  for (const FeatureSpec& f : schema.features()) {
    nlohmann::json e = {{"name", f.name}, {"kind", to_string(f.kind)}, {"role", to_string(f.role)}};
    if (!f.categories.empty()) e["categories"] = f.categories;
    out.push_back(std::move(e));
  }
  return out;
}

nlohmann::json to_json(const FilterRule& rule) {
  static constexpr const char* names[] = {"gt", "ge", "lt", "le", "eq", "in"};
  nlohmann::json out = {{"feature", rule.feature}, {"op", names[static_cast<int>(rule.op)]}};
  if (rule.op == FilterOp::in) {
    if (!rule.labels.empty()) out["value"] = rule.labels;
    else out["value"] = rule.numbers;
  } else if (!rule.labels.empty()) {
    out["value"] = rule.labels.front();
  } else {
    out["value"] = rule.numbers.front();
  }
  return out;
}

DataConfig income_data_config() {
  const nlohmann::json j = {
      {"features",
       {{{"name", "AGEP"}, {"kind", "continuous"}},
        {{"name", "COW"}, {"kind", "binary"}, {"categories", {"0", "1"}}},
        {{"name", "SCHL"}, {"kind", "binary"}, {"categories", {"0", "1"}}},
        {{"name", "MAR"}, {"kind", "binary"}, {"categories", {"0", "1"}}},
        {{"name", "POBP"}, {"kind", "binary"}, {"categories", {"0", "1"}}},
        {{"name", "RELP"}, {"kind", "binary"}, {"categories", {"0", "1"}}},
        {{"name", "WKHP"}, {"kind", "continuous"}},
        {{"name", "SEX"}, {"kind", "binary"}, {"categories", {"1", "2"}}},
        {{"name", "RAC1P"},
         {"kind", "categorical"},
         {"categories", {"1", "2", "3", "4", "5", "6", "7", "8", "9"}},
         {"role", "protected"}},
        {{"name", "PINCP"}, {"kind", "continuous"}, {"role", "target"}}}},
      {"filters",
       {{{"feature", "AGEP"}, {"op", "gt"}, {"value", 16}},
        {{"feature", "WKHP"}, {"op", "ge"}, {"value", 1}},
        {{"feature", "PINCP"}, {"op", "ge"}, {"value", 100}}}}};
  return parse_data_config(j);
}

Schema infer_schema(std::string_view csv_text, std::size_t max_categories) {
  std::vector<std::size_t> lines;
  const auto records = parse_csv_records(csv_text, lines);
  if (records.size() < 2) throw DataError("cannot infer a schema from a CSV without data rows");
  const auto& header = records.front();
  std::vector<FeatureSpec> specs;
  for (std::size_t c = 0; c < header.size(); ++c) {
    bool numeric = true;
    std::set<std::string> labels;
    std::map<double, std::string> by_value;
    for (std::size_t r = 1; r < records.size(); ++r) {
      if (c >= records[r].size()) throw DataError("CSV row " + std::to_string(r) + " is short");
      const std::string& cell = records[r][c];
      if (cell.empty() || cell == "NA" || cell == "NaN") continue;
      labels.insert(cell);
      double v = 0.0;
      const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size()) numeric = false;
      else by_value.emplace(v, cell);
    }
    FeatureSpec f;
    f.name = header[c];
    if (numeric && labels.size() > max_categories) {
      f.kind = FeatureKind::continuous;
    } else {
      if (labels.size() < 2) throw DataError("column '" + f.name + "' has fewer than two distinct values");
      f.kind = labels.size() == 2 ? FeatureKind::binary : FeatureKind::categorical;
      if (numeric && by_value.size() == labels.size()) {
        for (const auto& [v, label] : by_value) f.categories.push_back(label);
      } else {
        f.categories.assign(labels.begin(), labels.end());
      }
    }
    specs.push_back(std::move(f));
  }
  return Schema(std::move(specs));
}

}  // namespace repsample
