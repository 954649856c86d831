#include "repsample/report.hpp"

#include <charconv>
#include <cmath>

namespace repsample {

nlohmann::json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j = {{"metric", r.metric}, {"value", json_number(r.value)}};
  if (!r.feature.empty()) j["feature"] = r.feature;
  if (!r.sample.empty()) j["sample"] = r.sample;
  if (r.sd) j["sd"] = json_number(*r.sd);
  if (!r.groups.empty()) j["groups"] = r.groups;
  if (r.provenance) {
    j["provenance"] = {{"sampler", r.provenance->sampler},
                       {"seed", r.provenance->seed},
                       {"parameters", r.provenance->parameters}};
  }
  if (!r.extra.empty()) j["extra"] = r.extra;
  return j;
}

nlohmann::json to_json(std::span<const MetricReport> reports) {
  nlohmann::json out = nlohmann::json::array();
  for (const MetricReport& r : reports) out.push_back(to_json(r));
  return out;
}

MetricReport metric_report_from_json(const nlohmann::json& j) {
  auto number = [](const nlohmann::json& v) { return v.is_null() ? std::nan("") : v.get<double>(); };
  MetricReport r(j.at("metric").get<std::string>(), j.value("feature", std::string{}), number(j.at("value")));
  r.sample = j.value("sample", std::string{});
  if (j.contains("sd")) r.sd = number(j.at("sd"));
  r.groups = j.value("groups", std::vector<std::string>{});
  if (j.contains("provenance")) {
    const auto& p = j.at("provenance");
    r.provenance = Provenance{p.at("sampler").get<std::string>(), p.value("seed", std::uint64_t{0}),
                              p.value("parameters", nlohmann::json::object())};
  }
  r.extra = j.value("extra", nlohmann::json::object());
  return r;
}

void write_csv(std::span<const MetricReport> reports, std::ostream& out) {
  auto num = [](double v) {
    if (!std::isfinite(v)) return std::string();
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  out << "metric,feature,sample,groups,value,sd\n";
  for (const MetricReport& r : reports) {
    std::string groups;
    for (std::size_t i = 0; i < r.groups.size(); ++i) groups += (i ? "|" : "") + r.groups[i];
    out << r.metric << ',' << r.feature << ',' << r.sample << ',' << groups << ',' << num(r.value) << ','
        << (r.sd ? num(*r.sd) : std::string()) << '\n';
  }
}

}  // namespace repsample
