#include "repsample/datasheet.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "repsample/error.hpp"

namespace repsample {
namespace {

std::string format_number(double v) {
  if (std::isnan(v)) return "n/a";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
  return std::string(buf, res.ptr);
}

std::string describe_strata(const nlohmann::json& params) {
  std::ostringstream out;
  const auto& keys = params.at("strata_keys");
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i) out << " x ";
    out << keys[i].at("feature").get<std::string>();
    if (keys[i].contains("edges")) {
      const auto edges = keys[i].at("edges").get<std::vector<double>>();
      out << " binned at {";
      for (std::size_t e = 0; e < edges.size(); ++e) out << (e ? ", " : "") << format_number(edges[e]);
      out << "}";
    }
  }
  if (params.contains("n_cells")) out << " (" << params.at("n_cells").get<std::size_t>() << " nonempty cells)";
  return out.str();
}

std::string describe_method(const DatasheetSample& s) {
  const nlohmann::json& p = s.provenance.parameters;
  const std::string& m = s.provenance.sampler;
  std::ostringstream out;
  if (m == "srs") {
    out << "Simple random sampling without replacement.";
  } else if (m == "stratified") {
    out << "Proportional stratified random sampling (a miniature of the population). Strata: ";
    out << (p.contains("strata_keys") ? describe_strata(p) : std::string("not recorded")) << ". ";
    out << "Cell sizes follow largest-remainder apportionment of the sample size.";
  } else if (m == "density") {
    out << "Density sampling: rows drawn without replacement with probability proportional to their mean "
           "distance to the k nearest neighbours raised to a temperature, favouring sparse regions.";
    if (p.contains("k")) out << " k = " << p.at("k").dump() << ".";
    if (p.contains("temperature")) out << " Temperature = " << p.at("temperature").dump() << ".";
  } else if (m == "kdpp") {
    out << "k-DPP sampling with a linear kernel on the standardized encoded features: subsets drawn with "
           "probability proportional to the determinant of their Gram matrix, favouring diverse rows.";
    if (p.contains("kernel")) out << " Kernel: " << p.at("kernel").get<std::string>() << ".";
    if (p.contains("k")) out << " k = " << p.at("k").dump() << ".";
    if (p.contains("effective_rank")) out << " Kernel rank = " << p.at("effective_rank").dump() << ".";
    if (p.contains("batch")) {
      out << " Drawn as successive exact k-DPP batches over the remaining rows (batch = "
          << (p.at("batch") == 0 ? std::string("kernel rank") : p.at("batch").dump());
      if (p.contains("rounds")) out << ", rounds = " << p.at("rounds").dump();
      out << ").";
    }
  } else {
    out << "Sampler '" << m << "'.";
  }
  return out.str();
}

DatasheetSample sample_from_json(const nlohmann::json& j, std::size_t ordinal) {
  const nlohmann::json& s = j.contains("sample") ? j.at("sample") : j;
  const SampleIndex idx = sample_index_from_json(s);
  DatasheetSample out;
  out.provenance = idx.provenance;
  out.size = idx.indices.size();
  out.label = j.value("label", idx.provenance.sampler + (ordinal ? "_" + std::to_string(ordinal) : ""));
  return out;
}

}  // namespace

std::string representativity_concept(const std::string& sampler) {
  if (sampler == "srs" || sampler == "stratified") return "reflection";
  if (sampler == "density" || sampler == "kdpp") return "coverage";
  return "unspecified";
}

DatasheetInput parse_datasheet_input(const nlohmann::json& run) {
  try {
    DatasheetInput in;
    in.title = run.value("title", in.title);
    in.purpose = run.value("purpose", std::string{});
    in.target_population = run.value("target_population", std::string{});
    if (run.contains("data")) {
      in.source_id = run.at("data").value("source_id", std::string{});
      in.population_rows = run.at("data").value("n_rows", std::size_t{0});
    }
    if (run.contains("folds") && run.contains("summary")) {
      // summary.json of a cross-validation experiment.
      const auto& fold = run.at("folds").at(0);
      for (const auto& c : fold.at("conditions")) {
        if (!c.contains("provenance")) continue;
        const auto& p = c.at("provenance");
        in.samples.push_back({c.at("condition").get<std::string>(), c.at("n_train").get<std::size_t>(),
                              {p.at("sampler").get<std::string>(), p.at("seed").get<std::uint64_t>(),
                               p.value("parameters", nlohmann::json::object())}});
      }
      for (const auto& m : run.at("summary")) in.metrics.push_back(metric_report_from_json(m));
    } else {
      std::size_t ordinal = 0;
      for (const auto& s : run.value("samples", nlohmann::json::array())) in.samples.push_back(sample_from_json(s, ordinal++));
      for (const auto& m : run.value("metrics", nlohmann::json::array())) in.metrics.push_back(metric_report_from_json(m));
    }
    if (in.samples.empty()) throw ConfigError("the run lists no completed sampling run");
    return in;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run description: ") + e.what());
  }
}

std::string emit_datasheet(const DatasheetInput& in) {
  if (in.samples.empty()) throw ConfigError("a datasheet needs at least one completed sampling run");
  std::ostringstream md;
  md << "# " << in.title << "\n\n";

  md << "## Purpose\n\n";
  md << "*What is the purpose of collecting/creating the data, and what/who is the target population?*\n\n";
  md << (in.purpose.empty() ? "Purpose not stated by the data owner." : in.purpose) << "\n\n";
  if (!in.target_population.empty()) md << "Target population: " << in.target_population << "\n\n";
  if (!in.source_id.empty() || in.population_rows > 0) {
    md << "Sampling frame: `" << (in.source_id.empty() ? "unnamed" : in.source_id) << "`";
    if (in.population_rows > 0) md << ", " << in.population_rows << " rows";
    md << ".\n\n";
  }

  md << "## Sampling methodology\n\n";
  md << "*Which data representativity concept have you used?*\n\n";
  md << "| Sample | Concept | Sampler | Size | Seed |\n|---|---|---|---|---|\n";
  for (const DatasheetSample& s : in.samples) {
    md << "| " << s.label << " | " << representativity_concept(s.provenance.sampler) << " | " << s.provenance.sampler
       << " | " << s.size << " | " << s.provenance.seed << " |\n";
  }
  md << "\n";
  for (const DatasheetSample& s : in.samples) {
    md << "- **" << s.label << "** (" << representativity_concept(s.provenance.sampler) << "): " << describe_method(s)
       << "\n";
  }
  md << "\n";

  md << "## Evaluation\n\n";
  md << "*Are the collected data representative of the target population or \"good enough\"?*\n\n";
  if (in.metrics.empty()) {
    md << "No metrics were computed for this run.\n";
    return md.str();
  }
  md << "| Metric | Feature | Sample | Groups | Value | SD |\n|---|---|---|---|---|---|\n";
  for (const MetricReport& m : in.metrics) {
    std::string groups;
    for (std::size_t i = 0; i < m.groups.size(); ++i) groups += (i ? ", " : "") + m.groups[i];
    md << "| " << m.metric << " | " << m.feature << " | " << m.sample << " | " << groups << " | "
       << format_number(m.value) << " | " << (m.sd ? format_number(*m.sd) : "") << " |\n";
  }
  return md.str();
}

}  // namespace repsample
