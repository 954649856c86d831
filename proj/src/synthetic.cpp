#include "repsample/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "repsample/error.hpp"
#include "repsample/random.hpp"

namespace repsample {
namespace {

std::string_view to_string(TermTransform t) {
  switch (t) {
    case TermTransform::linear: return "linear";
    case TermTransform::square: return "square";
    case TermTransform::log: return "log";
  }
  return "linear";
}

TermTransform parse_transform(const std::string& s) {
  if (s == "linear") return TermTransform::linear;
  if (s == "square") return TermTransform::square;
  if (s == "log") return TermTransform::log;
  throw ConfigError("unknown target term transform '" + s + "' (expected linear, square or log)");
}

double standard_normal(Rng& rng) {
  // Box-Muller; one variate per call keeps the stream position simple.
  const double u1 = uniform01_open_low(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

struct GroupSampler {
  Eigen::VectorXd mean;
  Eigen::MatrixXd factor;  // covariance = factor * factor^T
  std::vector<double> p;   // per binary feature, in feature order
};

}  // namespace

std::size_t SyntheticPopulationSpec::continuous_count() const {
  return static_cast<std::size_t>(std::count_if(features.begin(), features.end(), [](const SyntheticFeature& f) {
    return f.kind == FeatureKind::continuous;
  }));
}

void SyntheticPopulationSpec::validate() const {
  if (n < 2) throw ConfigError("synthetic population needs n >= 2");
  if (groups.size() < 2) throw ConfigError("synthetic population needs at least two groups");
  std::vector<std::string> names;
  for (const SyntheticFeature& f : features) {
    if (f.kind == FeatureKind::categorical) throw ConfigError("synthetic feature '" + f.name + "' must be continuous or binary");
    if (f.kind == FeatureKind::binary && f.categories.size() != 2) {
      throw ConfigError("binary synthetic feature '" + f.name + "' needs two categories");
    }
    if (f.kind == FeatureKind::continuous && !(f.min < f.max)) {
      throw ConfigError("synthetic feature '" + f.name + "' has an empty clip range");
    }
    names.push_back(f.name);
  }
  names.push_back(group_feature);
  names.push_back(target);
  std::vector<std::string> sorted = names;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError("synthetic spec repeats a feature name");
  }

  const auto pc = static_cast<Eigen::Index>(continuous_count());
  double total = 0.0;
  for (const SyntheticGroup& g : groups) {
    if (!(g.proportion >= 0.0)) throw ConfigError("group '" + g.label + "' has a negative proportion");
    total += g.proportion;
    for (const SyntheticFeature& f : features) {
      if (f.kind == FeatureKind::continuous) {
        if (!g.mean.contains(f.name)) throw ConfigError("group '" + g.label + "' lacks a mean for '" + f.name + "'");
      } else {
        const auto it = g.p.find(f.name);
        if (it == g.p.end()) throw ConfigError("group '" + g.label + "' lacks a probability for '" + f.name + "'");
        if (!(it->second >= 0.0 && it->second <= 1.0)) {
          throw ConfigError("group '" + g.label + "' has probability outside [0, 1] for '" + f.name + "'");
        }
      }
    }
    if (g.covariance.rows() != pc || g.covariance.cols() != pc) {
      throw ConfigError("group '" + g.label + "' covariance must be " + std::to_string(pc) + " x " + std::to_string(pc));
    }
    if (!g.covariance.allFinite() || !g.covariance.isApprox(g.covariance.transpose(), 1e-12)) {
      throw ConfigError("invalid covariance for group '" + g.label + "': not symmetric");
    }
    if (pc > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.covariance, Eigen::EigenvaluesOnly);
      const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
      if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
        throw ConfigError("invalid covariance for group '" + g.label + "': not positive semidefinite");
      }
    }
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw ConfigError("group proportions sum to " + std::to_string(total) + ", expected 1");
  }

  for (const TargetTerm& t : terms) {
    const auto it = std::find_if(features.begin(), features.end(), [&](const SyntheticFeature& f) { return f.name == t.feature; });
    if (it == features.end()) throw ConfigError("target term names unknown feature '" + t.feature + "'");
    if (t.transform == TermTransform::log && it->kind == FeatureKind::continuous && !(it->min > 0.0)) {
      throw ConfigError("log term on '" + t.feature + "' needs a positive clip minimum");
    }
    if (t.transform == TermTransform::log && it->kind == FeatureKind::binary) {
      throw ConfigError("log term on binary feature '" + t.feature + "'");
    }
  }
  if (!(noise_sd >= 0.0)) throw ConfigError("target noise must be nonnegative");
  for (const ShiftProfile& s : states) {
    if (!(s.mix_uniform >= 0.0 && s.mix_uniform <= 1.0)) {
      throw ConfigError("state '" + s.name + "' has mix_uniform outside [0, 1]");
    }
    for (const auto& [name, shift] : s.mean_shift) {
      const auto it = std::find_if(features.begin(), features.end(), [&](const SyntheticFeature& f) { return f.name == name; });
      if (it == features.end() || it->kind != FeatureKind::continuous) {
        throw ConfigError("state '" + s.name + "' shifts '" + name + "', which is not a continuous feature");
      }
    }
  }
}

Schema SyntheticPopulationSpec::schema() const {
  std::vector<FeatureSpec> specs;
  for (const SyntheticFeature& f : features) specs.push_back({f.name, f.kind, f.categories, FeatureRole::input});
  FeatureSpec group{group_feature, FeatureKind::categorical, {}, FeatureRole::protected_attribute};
  for (const SyntheticGroup& g : groups) group.categories.push_back(g.label);
  specs.push_back(std::move(group));
  specs.push_back({target, FeatureKind::continuous, {}, FeatureRole::target});
  return Schema(std::move(specs));
}

TabularDataset generate_state(const SyntheticPopulationSpec& spec, const ShiftProfile* shift, std::size_t n,
                              std::uint64_t seed, std::string source_id) {
  spec.validate();
  const std::size_t nf = spec.features.size();
  const std::size_t ng = spec.groups.size();

  std::vector<double> cumulative(ng);
  double acc = 0.0;
  for (std::size_t g = 0; g < ng; ++g) {
    double p = spec.groups[g].proportion;
    if (shift != nullptr) p = (1.0 - shift->mix_uniform) * p + shift->mix_uniform / static_cast<double>(ng);
    acc += p;
    cumulative[g] = acc;
  }

  std::vector<GroupSampler> samplers(ng);
  for (std::size_t g = 0; g < ng; ++g) {
    const SyntheticGroup& grp = spec.groups[g];
    GroupSampler& s = samplers[g];
    s.mean.resize(static_cast<Eigen::Index>(spec.continuous_count()));
    Eigen::Index c = 0;
    for (const SyntheticFeature& f : spec.features) {
      if (f.kind == FeatureKind::continuous) {
        double m = grp.mean.at(f.name);
        if (shift != nullptr) {
          const auto it = shift->mean_shift.find(f.name);
          if (it != shift->mean_shift.end()) m += it->second;
        }
        s.mean[c++] = m;
      } else {
        s.p.push_back(grp.p.at(f.name));
      }
    }
    if (c > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(grp.covariance);
      s.factor = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
  }

  // Map each target term to its feature slot.
  struct Term {
    std::size_t feature;
    TermTransform transform;
    double coefficient;
  };
  std::vector<Term> terms;
  for (const TargetTerm& t : spec.terms) {
    for (std::size_t j = 0; j < nf; ++j) {
      if (spec.features[j].name == t.feature) terms.push_back({j, t.transform, t.coefficient});
    }
  }

  std::vector<Column> columns(nf + 2);
  for (std::size_t j = 0; j < nf; ++j) {
    if (spec.features[j].kind == FeatureKind::continuous) columns[j].real.reserve(n);
    else columns[j].codes.reserve(n);
  }
  columns[nf].codes.reserve(n);
  columns[nf + 1].real.reserve(n);

  Rng rng(seed);
  std::vector<double> row(nf);
  Eigen::VectorXd z(static_cast<Eigen::Index>(spec.continuous_count()));
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uniform01(rng) * acc;
    const auto g = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin()), ng - 1);
    const GroupSampler& s = samplers[g];
    for (Eigen::Index c = 0; c < z.size(); ++c) z[c] = standard_normal(rng);
    const Eigen::VectorXd cont = z.size() > 0 ? Eigen::VectorXd(s.mean + s.factor * z) : Eigen::VectorXd();
    Eigen::Index c = 0;
    std::size_t b = 0;
    for (std::size_t j = 0; j < nf; ++j) {
      const SyntheticFeature& f = spec.features[j];
      if (f.kind == FeatureKind::continuous) {
        row[j] = std::clamp(cont[c++], f.min, f.max);
        columns[j].real.push_back(row[j]);
      } else {
        row[j] = uniform01(rng) < s.p[b++] ? 1.0 : 0.0;
        columns[j].codes.push_back(static_cast<std::int32_t>(row[j]));
      }
    }
    double y = spec.intercept + spec.groups[g].effect;
    for (const Term& t : terms) {
      const double x = row[t.feature];
      switch (t.transform) {
        case TermTransform::linear: y += t.coefficient * x; break;
        case TermTransform::square: y += t.coefficient * x * x; break;
        case TermTransform::log: y += t.coefficient * std::log(x); break;
      }
    }
    if (spec.noise_sd > 0.0) y += spec.noise_sd * standard_normal(rng);
    columns[nf].codes.push_back(static_cast<std::int32_t>(g));
    columns[nf + 1].real.push_back(spec.exp_target ? std::exp(y) : y);
  }
  return TabularDataset(spec.schema(), std::move(columns), std::move(source_id));
}

std::vector<TabularDataset> generate_synthetic_population(const SyntheticPopulationSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<TabularDataset> out;
  out.push_back(generate_state(spec, nullptr, spec.n, derive_seed(seed, {"state", "base"}), "base"));
  for (const ShiftProfile& s : spec.states) {
    out.push_back(generate_state(spec, &s, spec.state_n, derive_seed(seed, {"state", s.name}), s.name));
  }
  return out;
}

SyntheticPopulationSpec census_like_spec(std::size_t n) {
  SyntheticPopulationSpec spec;
  spec.n = n;
  spec.state_n = n / 2;
  spec.features = {
      {"AGEP", FeatureKind::continuous, 17.0, 96.0, {}},
      {"COW", FeatureKind::binary, -INFINITY, INFINITY, {"0", "1"}},
      {"SCHL", FeatureKind::binary, -INFINITY, INFINITY, {"0", "1"}},
      {"MAR", FeatureKind::binary, -INFINITY, INFINITY, {"0", "1"}},
      {"POBP", FeatureKind::binary, -INFINITY, INFINITY, {"0", "1"}},
      {"RELP", FeatureKind::binary, -INFINITY, INFINITY, {"0", "1"}},
      {"WKHP", FeatureKind::continuous, 1.0, 99.0, {}},
      {"SEX", FeatureKind::binary, -INFINITY, INFINITY, {"1", "2"}},
  };

  // Race analog with a long tail; groups 3-5 are the small pooled minority.
  const double props[9] = {0.60, 0.06, 0.008, 0.003, 0.004, 0.15, 0.005, 0.12, 0.05};
  // age mean, hours mean, P(COW, SCHL, MAR, POBP, RELP, SEX), log-income effect, spread
  const double params[9][10] = {
      {44, 39, .15, .40, .55, .85, .50, .50, 0.00, 1.0},  {40, 38, .25, .28, .40, .95, .50, .50, -0.15, 1.0},
      {34, 33, .30, .15, .35, .98, .45, .50, -0.35, 1.0}, {36, 35, .30, .12, .40, .98, .45, .50, -0.30, 1.0},
      {35, 34, .30, .14, .38, .98, .45, .50, -0.30, 1.0}, {42, 40, .12, .55, .60, .30, .50, .50, 0.05, 1.35},
      {33, 37, .20, .20, .45, .70, .50, .50, -0.20, 1.0}, {36, 39, .08, .12, .50, .45, .50, .50, -0.20, 1.7},
      {32, 37, .15, .35, .35, .90, .45, .50, -0.05, 1.7},
  };
  double total = 0.0;
  for (double p : props) total += p;
  const char* binaries[6] = {"COW", "SCHL", "MAR", "POBP", "RELP", "SEX"};
  for (int g = 0; g < 9; ++g) {
    SyntheticGroup grp;
    grp.label = std::to_string(g + 1);
    grp.proportion = props[g] / total;
    grp.mean = {{"AGEP", params[g][0]}, {"WKHP", params[g][1]}};
    for (int b = 0; b < 6; ++b) grp.p[binaries[b]] = params[g][2 + b];
    grp.effect = params[g][8];
    const double s = params[g][9];
    grp.covariance = Eigen::Vector2d(144.0 * s * s, 100.0 * s * s).asDiagonal();
    spec.groups.push_back(std::move(grp));
  }

  spec.intercept = 3.4;
  spec.terms = {
      {"AGEP", TermTransform::linear, 0.14}, {"AGEP", TermTransform::square, -0.0015},
      {"WKHP", TermTransform::log, 1.1},     {"COW", TermTransform::linear, 0.1},
      {"SCHL", TermTransform::linear, 0.45}, {"MAR", TermTransform::linear, 0.15},
      {"POBP", TermTransform::linear, -0.05}, {"RELP", TermTransform::linear, 0.1},
      {"SEX", TermTransform::linear, 0.3},
  };
  spec.noise_sd = 0.75;
  spec.states = {
      {"similar_1", 0.0, {}},
      {"similar_2", 0.0, {}},
      {"shifted_1", 0.6, {{"AGEP", 10.0}, {"WKHP", -8.0}}},
      {"shifted_2", 0.3, {{"AGEP", -8.0}, {"WKHP", 6.0}}},
      {"shifted_3", 0.8, {{"AGEP", 4.0}, {"WKHP", -4.0}}},
      {"shifted_4", 0.5, {{"AGEP", 14.0}, {"WKHP", 2.0}}},
  };
  return spec;
}

SyntheticPopulationSpec parse_synthetic_spec(const nlohmann::json& j) {
  try {
    SyntheticPopulationSpec spec;
    spec.n = j.value("n", spec.n);
    spec.state_n = j.value("state_n", spec.n / 2);
    spec.group_feature = j.value("group_feature", spec.group_feature);
    spec.target = j.value("target", spec.target);
    spec.exp_target = j.value("exp_target", spec.exp_target);
    for (const auto& f : j.at("features")) {
      SyntheticFeature sf;
      sf.name = f.at("name").get<std::string>();
      sf.kind = parse_feature_kind(f.at("kind").get<std::string>());
      if (sf.kind == FeatureKind::continuous) {
        sf.min = f.contains("min") ? f.at("min").get<double>() : -INFINITY;
        sf.max = f.contains("max") ? f.at("max").get<double>() : INFINITY;
      } else {
        sf.categories = f.value("categories", std::vector<std::string>{"0", "1"});
      }
      spec.features.push_back(std::move(sf));
    }
    std::vector<std::string> continuous;
    for (const SyntheticFeature& f : spec.features) {
      if (f.kind == FeatureKind::continuous) continuous.push_back(f.name);
    }
    const auto pc = static_cast<Eigen::Index>(continuous.size());
    for (const auto& g : j.at("groups")) {
      SyntheticGroup grp;
      grp.label = g.at("label").get<std::string>();
      grp.proportion = g.at("proportion").get<double>();
      grp.mean = g.value("mean", std::map<std::string, double>{});
      grp.p = g.value("p", std::map<std::string, double>{});
      grp.effect = g.value("effect", 0.0);
      grp.covariance = Eigen::MatrixXd::Zero(pc, pc);
      if (g.contains("covariance")) {
        const auto& rows = g.at("covariance");
        if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != pc) {
          throw ConfigError("group '" + grp.label + "' covariance must have " + std::to_string(pc) + " rows");
        }
        for (Eigen::Index r = 0; r < pc; ++r) {
          const auto& row = rows[static_cast<std::size_t>(r)];
          if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != pc) {
            throw ConfigError("group '" + grp.label + "' covariance row " + std::to_string(r) + " has the wrong length");
          }
          for (Eigen::Index c = 0; c < pc; ++c) grp.covariance(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
      } else if (g.contains("sd")) {
        const auto sd = g.at("sd").get<std::map<std::string, double>>();
        for (Eigen::Index c = 0; c < pc; ++c) {
          const auto it = sd.find(continuous[static_cast<std::size_t>(c)]);
          if (it == sd.end()) throw ConfigError("group '" + grp.label + "' lacks an sd for '" + continuous[static_cast<std::size_t>(c)] + "'");
          grp.covariance(c, c) = it->second * it->second;
        }
      } else if (pc > 0) {
        throw ConfigError("group '" + grp.label + "' needs a covariance or sd");
      }
      spec.groups.push_back(std::move(grp));
    }
    if (j.contains("target_model")) {
      const auto& tm = j.at("target_model");
      spec.intercept = tm.value("intercept", 0.0);
      spec.noise_sd = tm.value("noise_sd", 0.0);
      for (const auto& t : tm.value("terms", nlohmann::json::array())) {
        spec.terms.push_back({t.at("feature").get<std::string>(), parse_transform(t.value("transform", "linear")),
                              t.at("coefficient").get<double>()});
      }
    }
    for (const auto& s : j.value("states", nlohmann::json::array())) {
      spec.states.push_back({s.at("name").get<std::string>(), s.value("mix_uniform", 0.0),
                             s.value("mean_shift", std::map<std::string, double>{})});
    }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic spec: ") + e.what());
  }
}

nlohmann::json to_json(const SyntheticPopulationSpec& spec) {
  nlohmann::json j;
  j["n"] = spec.n;
  j["state_n"] = spec.state_n;
  j["group_feature"] = spec.group_feature;
  j["target"] = spec.target;
  j["exp_target"] = spec.exp_target;
  for (const SyntheticFeature& f : spec.features) {
    nlohmann::json jf = {{"name", f.name}, {"kind", std::string(repsample::to_string(f.kind))}};
    if (f.kind == FeatureKind::continuous) {
      if (std::isfinite(f.min)) jf["min"] = f.min;
      if (std::isfinite(f.max)) jf["max"] = f.max;
    } else {
      jf["categories"] = f.categories;
    }
    j["features"].push_back(std::move(jf));
  }
  for (const SyntheticGroup& g : spec.groups) {
    nlohmann::json cov = nlohmann::json::array();
    for (Eigen::Index r = 0; r < g.covariance.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < g.covariance.cols(); ++c) row.push_back(g.covariance(r, c));
      cov.push_back(std::move(row));
    }
    j["groups"].push_back({{"label", g.label}, {"proportion", g.proportion}, {"mean", g.mean},
                           {"covariance", cov}, {"p", g.p}, {"effect", g.effect}});
  }
  nlohmann::json terms = nlohmann::json::array();
  for (const TargetTerm& t : spec.terms) {
    terms.push_back({{"feature", t.feature}, {"transform", std::string(to_string(t.transform))}, {"coefficient", t.coefficient}});
  }
  j["target_model"] = {{"intercept", spec.intercept}, {"noise_sd", spec.noise_sd}, {"terms", terms}};
  j["states"] = nlohmann::json::array();
  for (const ShiftProfile& s : spec.states) {
    j["states"].push_back({{"name", s.name}, {"mix_uniform", s.mix_uniform}, {"mean_shift", s.mean_shift}});
  }
  return j;
}

}  // namespace repsample
