#include "repsample/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numeric>
#include <set>
#include <thread>

#include "repsample/coverage.hpp"
#include "repsample/dpp.hpp"
#include "repsample/error.hpp"
#include "repsample/modeling.hpp"
#include "repsample/random.hpp"
#include "repsample/reflection.hpp"
#include "repsample/stats.hpp"

namespace repsample {
namespace {

const std::set<std::string> kMethods = {"srs", "stratified", "density", "kdpp"};

std::string_view to_string(Task t) { return t == Task::regression ? "regression" : "classification"; }

SamplerConfig parse_sampler(const nlohmann::json& j) {
  SamplerConfig s;
  if (j.is_string()) {
    s.method = j.get<std::string>();
  } else {
    s.method = j.at("method").get<std::string>();
    s.label = j.value("label", std::string{});
    s.k = j.value("k", s.k);
    s.temperature = j.value("temperature", s.temperature);
    s.batch = j.value("batch", s.batch);
    for (const auto& k : j.value("strata", nlohmann::json::array())) {
      s.strata.push_back({k.at("feature").get<std::string>(), k.value("edges", std::vector<double>{})});
    }
  }
  if (!kMethods.contains(s.method)) {
    throw ConfigError("unknown sampler '" + s.method + "' (expected srs, stratified, density or kdpp)");
  }
  if (s.label.empty()) s.label = s.method;
  if (s.k == 0) throw ConfigError("density sampler needs k >= 1");
  return s;
}

nlohmann::json sampler_json(const SamplerConfig& s) {
  nlohmann::json j = {{"label", s.label}, {"method", s.method}};
  if (s.method == "density") {
    j["k"] = s.k;
    j["temperature"] = s.temperature;
  } else if (s.method == "kdpp") {
    j["batch"] = s.batch;
  } else if (s.method == "stratified" && !s.strata.empty()) {
    for (const StrataKey& k : s.strata) {
      nlohmann::json e = {{"feature", k.feature}};
      if (!k.edges.empty()) e["edges"] = k.edges;
      j["strata"].push_back(std::move(e));
    }
  }
  return j;
}

// Runs task(0..count-1) on up to `threads` workers; the first exception is
// rethrown after every worker has stopped.
template <typename F>
void parallel_for(std::size_t count, unsigned threads, F&& task) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<std::string> group_labels(const TabularDataset& ds, const std::string& feature) {
  const std::size_t j = ds.schema().index_of(feature);
  const FeatureSpec& f = ds.schema()[j];
  if (!f.is_categorical()) throw ConfigError("protected feature '" + feature + "' must be categorical");
  std::vector<std::string> out;
  out.reserve(ds.n_rows());
  for (std::int32_t c : ds.codes(j)) out.push_back(f.categories[static_cast<std::size_t>(c)]);
  return out;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

struct FittedModel {
  std::optional<LinearModel> linear;
  std::optional<LogisticModel> logistic;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const { return linear ? linear->predict(x) : logistic->predict(x); }
};

FittedModel fit(const ExperimentConfig& cfg, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  FittedModel m;
  if (cfg.task == Task::regression) m.linear = fit_ols(x, y);
  else m.logistic = fit_logistic(x, y);
  return m;
}

// The task's headline performance on held-out rows.
double performance(const ExperimentConfig& cfg, const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
  if (cfg.task == Task::regression) return mean_squared_error(pred, y);
  double hits = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) hits += pred[i] == y[i] ? 1.0 : 0.0;
  return hits / static_cast<double>(y.size());
}

const char* performance_name(const ExperimentConfig& cfg) { return cfg.task == Task::regression ? "mse" : "accuracy"; }

struct FoldSplit {
  TabularDataset train;
  TabularDataset test;
  FeatureMatrix fm_train;
  FeatureMatrix fm_test;
  Eigen::VectorXd y_train;
  Eigen::VectorXd y_test;
};

FoldSplit split_fold(const TabularDataset& ds, const std::vector<std::size_t>& assignment, std::size_t fold) {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) (assignment[i] == fold ? test_rows : train_rows).push_back(i);
  FoldSplit s;
  s.train = extract_rows(ds, train_rows);
  s.test = extract_rows(ds, test_rows);
  s.fm_train = encode_matrix(s.train, true);
  s.fm_test = encode_matrix(s.test, true, &s.train);
  s.y_train = target_vector(s.train);
  s.y_test = target_vector(s.test);
  return s;
}

Eigen::VectorXd select(const Eigen::VectorXd& v, std::span<const std::size_t> rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(rows[i])];
  return out;
}

std::size_t sample_size(const ExperimentConfig& cfg, std::size_t n_train) {
  const auto size = static_cast<std::size_t>(std::floor(cfg.sample_fraction * static_cast<double>(n_train)));
  return std::clamp<std::size_t>(size, 1, n_train);
}

const SamplerConfig& find_sampler(const ExperimentConfig& cfg, const std::string& label, SamplerConfig& fallback) {
  for (const SamplerConfig& s : cfg.samplers) {
    if (s.label == label) return s;
  }
  for (const SamplerConfig& s : cfg.samplers) {
    if (s.method == label) return s;
  }
  if (!kMethods.contains(label)) throw ConfigError("OOD condition '" + label + "' is neither a sampler label nor a method");
  fallback.label = fallback.method = label;
  return fallback;
}

FoldResult run_fold(const TabularDataset& ds, const ExperimentConfig& cfg, std::size_t rep, std::size_t fold,
                    const std::vector<std::size_t>& assignment) {
  FoldSplit split = split_fold(ds, assignment, fold);
  FoldResult r;
  r.repetition = rep;
  r.fold = fold;
  r.n_train = split.train.n_rows();
  r.n_test = split.test.n_rows();

  std::vector<std::string> test_groups;
  if (cfg.protected_pairing) test_groups = group_labels(split.test, cfg.protected_pairing->feature);
  std::vector<std::string> diversity = cfg.diversity_features;
  if (diversity.empty() && cfg.protected_pairing) diversity.push_back(cfg.protected_pairing->feature);

  auto evaluate = [&](ConditionResult& c, std::span<const std::size_t> rows, std::uint64_t fairness_seed) {
    const FittedModel model = fit(cfg, split.fm_train.select_rows(rows).values, select(split.y_train, rows));
    const Eigen::VectorXd pred = model.predict(split.fm_test.values);
    c.metrics[performance_name(cfg)] = performance(cfg, pred, split.y_test);
    if (!cfg.protected_pairing) return;
    const ProtectedPairing& pp = *cfg.protected_pairing;
    PredictionTriple pt{to_vector(pred), to_vector(split.y_test), test_groups};
    try {
      if (cfg.task == Task::regression) {
        c.metrics["rdd"] = rdd(pt, pp.major, pp.minor);
        const ReodResult eo = reod(pt, pp.major, pp.minor, cfg.reod_bins, cfg.reod_resamples, fairness_seed,
                                     cfg.reod_aggregation);
        c.metrics["reod"] = eo.value;
        c.metrics["reod_coverage"] = eo.coverage;
      } else {
        c.metrics["cdd"] = cdd(pt, pp.major, pp.minor);
        c.metrics["ceod"] = ceod(pt, pp.major, pp.minor);
      }
    } catch (const ConfigError& e) {
      r.warnings.push_back(c.condition + ": fairness not evaluated: " + e.what());
    }
  };
  auto describe = [&](ConditionResult& c, std::span<const std::size_t> rows) {
    for (const std::string& f : diversity) c.combinatorial[f] = combinatorial_diversity(split.train, rows, f);
    c.geometric_log = geometric_diversity(split.fm_train, rows).log_volume;
  };
  auto seed_for = [&](std::string_view what, std::string_view condition) {
    return derive_seed(cfg.seed, {"repetition", std::uint64_t{rep}, "fold", std::uint64_t{fold}, what, condition});
  };

  std::vector<std::size_t> all(split.train.n_rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  ConditionResult full;
  full.condition = "full";
  full.n_train = all.size();
  evaluate(full, all, seed_for("fairness", "full"));
  describe(full, all);
  r.conditions.push_back(std::move(full));

  const std::size_t size = sample_size(cfg, split.train.n_rows());
  for (const SamplerConfig& s : cfg.samplers) {
    ConditionResult c;
    c.condition = s.label;
    const SampleIndex sample = draw_sample(split.train, split.fm_train, s, size, seed_for("sample", s.label));
    c.n_train = sample.indices.size();
    c.provenance = sample.provenance;
    evaluate(c, sample.indices, seed_for("fairness", s.label));
    describe(c, sample.indices);
    const TabularDataset sub = extract_rows(split.train, sample.indices);
    for (const MetricReport& m : reflection_report(sub, split.train, cfg.reflection_features)) {
      if (m.metric == "wasserstein1") c.wasserstein1[m.feature] = m.value;
      else if (m.metric == "ks") c.ks[m.feature] = m.value;
    }
    for (const std::string& f : diversity) {
      const auto& cats = split.train.schema()[split.train.schema().index_of(f)].categories;
      const auto codes = sub.codes(sub.schema().index_of(f));
      const std::set<std::int32_t> seen(codes.begin(), codes.end());
      if (seen.size() < cats.size()) {
        r.warnings.push_back(s.label + ": sample holds " + std::to_string(seen.size()) + " of " +
                             std::to_string(cats.size()) + " '" + f + "' categories");
      }
    }
    r.conditions.push_back(std::move(c));
  }
  return r;
}

double sd_of(const std::vector<double>& v) { return sample_sd(v); }

}  // namespace

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross validation needs at least two folds");
  if (n < folds) throw ConfigError("fewer rows than folds");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)), i - 1);
    std::swap(perm[i - 1], perm[j]);
  }
  std::vector<std::size_t> fold(n);
  for (std::size_t q = 0; q < n; ++q) fold[perm[q]] = q * folds / n;
  return fold;
}

SampleIndex draw_sample(const TabularDataset& ds, const FeatureMatrix& fm, const SamplerConfig& s, std::size_t size,
                        std::uint64_t seed) {
  if (s.method == "srs") return sample_simple_random(ds, size, seed);
  if (s.method == "stratified") {
    const std::vector<StrataKey> keys = s.strata.empty() ? default_strata_keys() : s.strata;
    return sample_stratified(ds, build_strata(ds, keys), size, seed);
  }
  if (s.method == "density") return sample_density(ds, compute_density_weights(fm, s.k, s.temperature), size, seed);
  if (s.method == "kdpp") return sample_kdpp_batched(ds, fm, size, seed, s.batch);
  throw ConfigError("unknown sampler '" + s.method + "'");
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  try {
    ExperimentConfig cfg;
    const std::string task = j.value("task", "regression");
    if (task == "regression") cfg.task = Task::regression;
    else if (task == "classification") cfg.task = Task::classification;
    else throw ConfigError("task must be regression or classification, not '" + task + "'");
    cfg.folds = j.value("folds", cfg.folds);
    cfg.repetitions = j.value("repetitions", cfg.repetitions);
    cfg.sample_fraction = j.value("sample_fraction", cfg.sample_fraction);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("samplers")) {
      for (const auto& s : j.at("samplers")) cfg.samplers.push_back(parse_sampler(s));
    } else {
      cfg.samplers = {parse_sampler("stratified"), parse_sampler("density")};
    }
    if (j.contains("protected_feature")) {
      ProtectedPairing pp;
      pp.feature = j.at("protected_feature").get<std::string>();
      pp.major = parse_group_selector(j.value("group_major", nlohmann::json("1")));
      pp.minor = parse_group_selector(j.value("group_minor", nlohmann::json::array({"3", "4", "5"})));
      cfg.protected_pairing = std::move(pp);
    }
    cfg.log_target = j.value("log_target", cfg.log_target);
    cfg.class_threshold = j.value("class_threshold", cfg.class_threshold);
    cfg.reod_bins = j.value("reod_bins", cfg.reod_bins);
    cfg.reod_resamples = j.value("reod_resamples", cfg.reod_resamples);
    if (j.contains("reod_aggregation")) cfg.reod_aggregation = parse_reod_aggregation(j.at("reod_aggregation").get<std::string>());
    cfg.diversity_features = j.value("diversity_features", cfg.diversity_features);
    cfg.reflection_features = j.value("reflection_features", cfg.reflection_features);
    if (j.contains("ood")) {
      cfg.ood_baseline = j.at("ood").value("baseline", cfg.ood_baseline);
      cfg.ood_coverage = j.at("ood").value("coverage", cfg.ood_coverage);
    }
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("output_dir")) cfg.output_dir = base_dir / j.at("output_dir").get<std::string>();

    if (j.contains("data")) {
      const auto& d = j.at("data");
      if (d.contains("synthetic")) {
        const auto& s = d.at("synthetic");
        if (s.is_string()) {
          if (s.get<std::string>() != "census_like") {
            throw ConfigError("unknown synthetic population '" + s.get<std::string>() + "'");
          }
          cfg.data.synthetic = census_like_spec(d.value("n", std::size_t{10000}));
          if (d.contains("state_n")) cfg.data.synthetic->state_n = d.at("state_n").get<std::size_t>();
        } else {
          cfg.data.synthetic = parse_synthetic_spec(s);
        }
        cfg.data.synthetic_seed = d.value("seed", cfg.seed);
      } else {
        cfg.data.train_csv = base_dir / d.at("train").get<std::string>();
        for (const auto& p : d.value("states", std::vector<std::string>{})) cfg.data.state_csvs.push_back(base_dir / p);
        const auto& c = d.at("config");
        cfg.data.data_config = parse_data_config(c.is_string() ? load_json(base_dir / c.get<std::string>()) : c);
      }
    } else {
      cfg.data.synthetic = census_like_spec();
      cfg.data.synthetic_seed = cfg.seed;
    }

    if (cfg.folds < 2) throw ConfigError("folds must be at least 2");
    if (cfg.repetitions < 1) throw ConfigError("repetitions must be at least 1");
    if (!(cfg.sample_fraction > 0.0 && cfg.sample_fraction <= 1.0)) {
      throw ConfigError("sample_fraction must lie in (0, 1]");
    }
    if (cfg.threads < 1) throw ConfigError("threads must be at least 1");
    if (cfg.reod_bins < 2 || cfg.reod_resamples < 1) throw ConfigError("REOD needs >= 2 bins and >= 1 resample");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    std::set<std::string> labels;
    for (const SamplerConfig& s : cfg.samplers) {
      if (s.label == "full") throw ConfigError("'full' is reserved for the full-training condition");
      if (!labels.insert(s.label).second) throw ConfigError("duplicate sampler label '" + s.label + "'");
    }
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["task"] = to_string(cfg.task);
  j["folds"] = cfg.folds;
  j["repetitions"] = cfg.repetitions;
  j["sample_fraction"] = cfg.sample_fraction;
  j["seed"] = cfg.seed;
  j["samplers"] = nlohmann::json::array();
  for (const SamplerConfig& s : cfg.samplers) j["samplers"].push_back(sampler_json(s));
  if (cfg.protected_pairing) {
    j["protected_feature"] = cfg.protected_pairing->feature;
    j["group_major"] = {{"name", cfg.protected_pairing->major.name}, {"labels", cfg.protected_pairing->major.labels}};
    j["group_minor"] = {{"name", cfg.protected_pairing->minor.name}, {"labels", cfg.protected_pairing->minor.labels}};
  }
  if (cfg.task == Task::regression) j["log_target"] = cfg.log_target;
  else j["class_threshold"] = cfg.class_threshold;
  j["reod_bins"] = cfg.reod_bins;
  j["reod_resamples"] = cfg.reod_resamples;
  j["reod_aggregation"] = std::string(to_string(cfg.reod_aggregation));
  j["diversity_features"] = cfg.diversity_features;
  j["reflection_features"] = cfg.reflection_features;
  j["ood"] = {{"baseline", cfg.ood_baseline}, {"coverage", cfg.ood_coverage}};
  j["alpha"] = cfg.alpha;
  if (cfg.data.synthetic) {
    j["data"] = {{"synthetic", to_json(*cfg.data.synthetic)}, {"seed", cfg.data.synthetic_seed}};
  } else {
    nlohmann::json states = nlohmann::json::array();
    for (const auto& p : cfg.data.state_csvs) states.push_back(p.filename().string());
    j["data"] = {{"train", cfg.data.train_csv.filename().string()}, {"states", states}};
  }
  return j;
}

TabularDataset prepare_target(const TabularDataset& ds, const ExperimentConfig& cfg) {
  const auto t = ds.schema().target_index();
  if (!t) throw ConfigError("the experiment data has no target feature");
  const FeatureSpec& f = ds.schema()[*t];
  if (cfg.task == Task::regression) {
    if (f.is_categorical()) throw ConfigError("regression needs a continuous target");
    return cfg.log_target ? transform_target_log(ds) : ds;
  }
  if (f.is_categorical()) {
    if (f.kind != FeatureKind::binary) throw ConfigError("classification needs a binary or continuous target");
    return ds;
  }
  return binarize_target(ds, cfg.class_threshold);
}

std::vector<TabularDataset> load_experiment_data(const ExperimentConfig& cfg) {
  std::vector<TabularDataset> raw;
  if (cfg.data.synthetic) {
    raw = generate_synthetic_population(*cfg.data.synthetic, cfg.data.synthetic_seed);
  } else {
    const DataConfig& dc = *cfg.data.data_config;
    raw.push_back(ingest_csv(cfg.data.train_csv, dc.schema, dc.filters).dataset);
    for (const auto& p : cfg.data.state_csvs) raw.push_back(ingest_csv(p, dc.schema, dc.filters).dataset);
  }
  std::vector<TabularDataset> out;
  for (const TabularDataset& ds : raw) out.push_back(prepare_target(ds, cfg));
  return out;
}

CvResult run_cv_experiment(const TabularDataset& ds, const ExperimentConfig& cfg) {
  if (ds.n_rows() < cfg.folds) throw ConfigError("fewer rows than folds");
  if (cfg.protected_pairing) group_labels(ds, cfg.protected_pairing->feature);

  std::vector<std::vector<std::size_t>> assignments;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    assignments.push_back(fold_assignment(ds.n_rows(), cfg.folds, derive_seed(cfg.seed, {"folds", std::uint64_t{rep}})));
  }
  CvResult result;
  result.folds.resize(cfg.repetitions * cfg.folds);
  parallel_for(result.folds.size(), cfg.threads, [&](std::size_t task) {
    const std::size_t rep = task / cfg.folds;
    const std::size_t fold = task % cfg.folds;
    result.folds[task] = run_fold(ds, cfg, rep, fold, assignments[rep]);
  });

  // Condition order and metric names come from the first fold.
  const FoldResult& first = result.folds.front();
  auto column = [&](std::size_t c, auto&& get) {
    std::vector<double> v;
    for (const FoldResult& f : result.folds) {
      const std::optional<double> x = get(f.conditions[c]);
      v.push_back(x.value_or(std::nan("")));
    }
    return v;
  };
  auto summarize = [&](std::string metric, std::string feature, std::size_t c, const std::vector<double>& v) {
    std::vector<double> finite;
    for (double x : v) {
      if (std::isfinite(x)) finite.push_back(x);
    }
    MetricReport m{std::move(metric), std::move(feature), finite.empty() ? std::nan("") : mean(finite)};
    m.sd = sd_of(finite);
    m.sample = first.conditions[c].condition;
    m.extra = {{"n", finite.size()}};
    result.summary.push_back(std::move(m));
  };
  auto lookup = [](const std::map<std::string, double>& m, const std::string& k) -> std::optional<double> {
    const auto it = m.find(k);
    if (it == m.end()) return std::nullopt;
    return it->second;
  };

  std::vector<std::string> headline;
  for (std::size_t c = 0; c < first.conditions.size(); ++c) {
    const ConditionResult& cond = first.conditions[c];
    for (const auto& [name, value] : cond.metrics) {
      summarize(name, "", c, column(c, [&](const ConditionResult& x) { return lookup(x.metrics, name); }));
      if (c == 0 && name != "reod_coverage") headline.push_back(name);
    }
    for (const auto& [f, value] : cond.combinatorial) {
      summarize("combinatorial_diversity", f, c, column(c, [&](const ConditionResult& x) { return lookup(x.combinatorial, f); }));
    }
    summarize("geometric_diversity_log", "", c, column(c, [](const ConditionResult& x) { return x.geometric_log; }));
    for (const auto& [f, value] : cond.wasserstein1) {
      summarize("wasserstein1", f, c, column(c, [&](const ConditionResult& x) { return lookup(x.wasserstein1, f); }));
    }
    for (const auto& [f, value] : cond.ks) {
      summarize("ks", f, c, column(c, [&](const ConditionResult& x) { return lookup(x.ks, f); }));
    }
  }

  // Paired tests between every pair of conditions on the headline metrics,
  // BH-adjusted over the whole table.
  std::vector<double> raw;
  for (const std::string& metric : headline) {
    for (std::size_t a = 0; a < first.conditions.size(); ++a) {
      for (std::size_t b = a + 1; b < first.conditions.size(); ++b) {
        auto get = [&](const ConditionResult& x) { return lookup(x.metrics, metric); };
        const std::vector<double> va = column(a, get);
        const std::vector<double> vb = column(b, get);
        std::vector<double> fa;
        std::vector<double> fb;
        for (std::size_t i = 0; i < va.size(); ++i) {
          if (std::isfinite(va[i]) && std::isfinite(vb[i])) {
            fa.push_back(va[i]);
            fb.push_back(vb[i]);
          }
        }
        if (fa.size() < 2) continue;
        const TTestResult t = paired_t_test(fa, fb);
        PairedComparison pc{metric, first.conditions[a].condition, first.conditions[b].condition, t.mean_diff, t.t,
                            t.p_value};
        result.tests.push_back(pc);
        raw.push_back(t.p_value);
      }
    }
  }
  const std::vector<double> adj = bh_adjust(raw);
  for (std::size_t i = 0; i < adj.size(); ++i) {
    result.tests[i].p_adj = adj[i];
    result.tests[i].significant = adj[i] < cfg.alpha;
  }
  return result;
}

nlohmann::json to_json(const CvResult& r, const ExperimentConfig& cfg, const TabularDataset& ds) {
  nlohmann::json j;
  j["config"] = to_json(cfg);
  j["data"] = {{"source_id", ds.source_id()}, {"id", ds.id()}, {"n_rows", ds.n_rows()}};
  nlohmann::json folds = nlohmann::json::array();
  for (const FoldResult& f : r.folds) {
    nlohmann::json conds = nlohmann::json::array();
    for (const ConditionResult& c : f.conditions) {
      nlohmann::json jc = {{"condition", c.condition}, {"n_train", c.n_train}};
      nlohmann::json metrics = nlohmann::json::object();
      for (const auto& [k, v] : c.metrics) metrics[k] = json_number(v);
      jc["metrics"] = metrics;
      nlohmann::json comb = nlohmann::json::object();
      for (const auto& [k, v] : c.combinatorial) comb[k] = json_number(v);
      jc["combinatorial_diversity"] = comb;
      jc["geometric_diversity_log"] = c.geometric_log ? json_number(*c.geometric_log) : nlohmann::json();
      if (!c.wasserstein1.empty()) {
        nlohmann::json w = nlohmann::json::object();
        nlohmann::json k = nlohmann::json::object();
        for (const auto& [name, v] : c.wasserstein1) w[name] = json_number(v);
        for (const auto& [name, v] : c.ks) k[name] = json_number(v);
        jc["wasserstein1"] = w;
        jc["ks"] = k;
      }
      if (c.provenance) {
        jc["provenance"] = {{"sampler", c.provenance->sampler}, {"seed", c.provenance->seed},
                            {"parameters", c.provenance->parameters}};
      }
      conds.push_back(std::move(jc));
    }
    folds.push_back({{"repetition", f.repetition}, {"fold", f.fold}, {"n_train", f.n_train}, {"n_test", f.n_test},
                     {"conditions", conds}, {"warnings", f.warnings}});
  }
  j["folds"] = folds;
  j["summary"] = to_json(std::span<const MetricReport>(r.summary));
  nlohmann::json tests = nlohmann::json::array();
  for (const PairedComparison& t : r.tests) {
    tests.push_back({{"metric", t.metric}, {"a", t.a}, {"b", t.b}, {"mean_diff", json_number(t.mean_diff)},
                     {"t", json_number(t.t)}, {"p", json_number(t.p)}, {"p_adj", json_number(t.p_adj)},
                     {"significant", t.significant}});
  }
  j["tests"] = tests;
  return j;
}

double state_similarity(const TabularDataset& a, const TabularDataset& b, const std::vector<TabularDataset>& universe) {
  if (universe.empty()) throw ConfigError("state similarity needs a nonempty universe");
  const FeatureMatrix fa = encode_matrix(a, false);
  const FeatureMatrix fb = encode_matrix(b, false);
  const Eigen::Index p = fa.values.cols();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(p);
  double n = 0.0;
  for (const TabularDataset& ds : universe) {
    const FeatureMatrix f = encode_matrix(ds, false);
    if (f.values.cols() != p) throw ConfigError("states do not share an encoding");
    sum += f.values.colwise().sum().transpose();
    sumsq += f.values.array().square().colwise().sum().matrix().transpose();
    n += static_cast<double>(f.values.rows());
  }
  const Eigen::VectorXd mu = sum / n;
  const Eigen::VectorXd var = (sumsq / n - mu.cwiseProduct(mu)).cwiseMax(0.0);
  std::vector<double> za;
  std::vector<double> zb;
  const Eigen::VectorXd ma = fa.values.colwise().mean().transpose();
  const Eigen::VectorXd mb = fb.values.colwise().mean().transpose();
  for (Eigen::Index c = 0; c < p; ++c) {
    if (var[c] <= 1e-12 * std::max(1.0, mu[c] * mu[c])) continue;
    const double s = std::sqrt(var[c]);
    za.push_back((ma[c] - mu[c]) / s);
    zb.push_back((mb[c] - mu[c]) / s);
  }
  if (za.size() < 2) return 0.0;
  const double ma_ = mean(za);
  const double mb_ = mean(zb);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < za.size(); ++i) {
    sab += (za[i] - ma_) * (zb[i] - mb_);
    saa += (za[i] - ma_) * (za[i] - ma_);
    sbb += (zb[i] - mb_) * (zb[i] - mb_);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

OodResult run_ood_experiment(const TabularDataset& train, const std::vector<TabularDataset>& others,
                             const ExperimentConfig& cfg) {
  for (const TabularDataset& o : others) {
    if (!(o.schema() == train.schema())) {
      throw ConfigError("state '" + o.source_id() + "' does not share the training schema");
    }
  }
  SamplerConfig fb_base;
  SamplerConfig fb_cov;
  const SamplerConfig& base = find_sampler(cfg, cfg.ood_baseline, fb_base);
  const SamplerConfig& cov = find_sampler(cfg, cfg.ood_coverage, fb_cov);

  OodResult result;
  std::vector<TabularDataset> universe{train};
  universe.insert(universe.end(), others.begin(), others.end());

  // Categories a state never shows are encoded as all-zero columns.
  for (const TabularDataset& o : others) {
    for (std::size_t j = 0; j < o.schema().size(); ++j) {
      const FeatureSpec& f = o.schema()[j];
      if (!f.is_categorical() || !f.is_model_input()) continue;
      std::vector<bool> seen(f.categories.size(), false);
      for (std::int32_t c : o.codes(j)) seen[static_cast<std::size_t>(c)] = true;
      const auto present = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
      if (present < f.categories.size()) {
        result.warnings.push_back("state '" + o.source_id() + "' lacks " +
                                  std::to_string(f.categories.size() - present) + " '" + f.name +
                                  "' categories; their indicator columns are zero");
      }
    }
  }

  const std::size_t n_states = others.size() + 1;
  const std::size_t n_tasks = cfg.repetitions * cfg.folds;
  // perf[task][state] = (baseline, coverage)
  std::vector<std::vector<std::pair<double, double>>> perf(n_tasks);
  std::vector<std::vector<std::size_t>> assignments;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    assignments.push_back(
        fold_assignment(train.n_rows(), cfg.folds, derive_seed(cfg.seed, {"folds", std::uint64_t{rep}})));
  }
  parallel_for(n_tasks, cfg.threads, [&](std::size_t task) {
    const std::size_t rep = task / cfg.folds;
    const std::size_t fold = task % cfg.folds;
    FoldSplit split = split_fold(train, assignments[rep], fold);
    const std::size_t size = sample_size(cfg, split.train.n_rows());
    auto train_on = [&](const SamplerConfig& s) {
      const std::uint64_t seed = derive_seed(
          cfg.seed, {"repetition", std::uint64_t{rep}, "fold", std::uint64_t{fold}, "sample", std::string_view(s.label)});
      const SampleIndex sample = draw_sample(split.train, split.fm_train, s, size, seed);
      return fit(cfg, split.fm_train.select_rows(sample.indices).values, select(split.y_train, sample.indices));
    };
    const FittedModel mb = train_on(base);
    const FittedModel mc = train_on(cov);
    auto& row = perf[task];
    row.emplace_back(performance(cfg, mb.predict(split.fm_test.values), split.y_test),
                     performance(cfg, mc.predict(split.fm_test.values), split.y_test));
    for (const TabularDataset& o : others) {
      const FeatureMatrix fo = encode_matrix(o, true, &split.train);
      const Eigen::VectorXd yo = target_vector(o);
      row.emplace_back(performance(cfg, mb.predict(fo.values), yo), performance(cfg, mc.predict(fo.values), yo));
    }
  });

  std::vector<double> raw;
  for (std::size_t s = 0; s < n_states; ++s) {
    StateResult sr;
    sr.state = s == 0 ? train.source_id() : others[s - 1].source_id();
    sr.in_distribution = s == 0;
    sr.similarity = s == 0 ? 1.0 : state_similarity(train, others[s - 1], universe);
    std::vector<double> vb;
    std::vector<double> vc;
    for (std::size_t task = 0; task < n_tasks; ++task) {
      const auto [b, c] = perf[task][s];
      vb.push_back(b);
      vc.push_back(c);
      const double imp = cfg.task == Task::regression ? 100.0 * (b - c) / b : 100.0 * (c - b) / b;
      sr.improvement_pct.push_back(imp);
    }
    sr.mean_improvement_pct = mean(sr.improvement_pct);
    sr.sd = sample_sd(sr.improvement_pct);
    const TTestResult t = paired_t_test(vb, vc);
    sr.t = t.t;
    sr.p = t.p_value;
    raw.push_back(t.p_value);
    result.states.push_back(std::move(sr));
  }
  const std::vector<double> adj = bh_adjust(raw);
  double total = 0.0;
  for (std::size_t s = 0; s < n_states; ++s) {
    StateResult& sr = result.states[s];
    sr.p_adj = adj[s];
    sr.significant = adj[s] < cfg.alpha;
    if (s == 0) continue;
    total += sr.mean_improvement_pct;
    if (sr.mean_improvement_pct > 0.0) ++result.improved_states;
    if (sr.significant) ++result.significant_states;
  }
  result.mean_improvement_pct = others.empty() ? 0.0 : total / static_cast<double>(others.size());
  return result;
}

nlohmann::json to_json(const OodResult& r, const ExperimentConfig& cfg) {
  nlohmann::json states = nlohmann::json::array();
  for (const StateResult& s : r.states) {
    nlohmann::json imp = nlohmann::json::array();
    for (double v : s.improvement_pct) imp.push_back(json_number(v));
    states.push_back({{"state", s.state}, {"in_distribution", s.in_distribution},
                      {"similarity", json_number(s.similarity)}, {"mean_improvement_pct", json_number(s.mean_improvement_pct)},
                      {"sd", json_number(s.sd)}, {"t", json_number(s.t)}, {"p", json_number(s.p)},
                      {"p_adj", json_number(s.p_adj)}, {"significant", s.significant}, {"per_fold", imp}});
  }
  return {{"config", to_json(cfg)},
          {"baseline", cfg.ood_baseline},
          {"coverage", cfg.ood_coverage},
          {"metric", cfg.task == Task::regression ? "mse_reduction_pct" : "accuracy_gain_pct"},
          {"states", states},
          {"mean_improvement_pct", json_number(r.mean_improvement_pct)},
          {"improved_states", r.improved_states},
          {"significant_states", r.significant_states},
          {"warnings", r.warnings}};
}

void write_per_state_csv(const OodResult& r, std::ostream& out) {
  out << "state,mean_improvement_pct,sd,p_adj,significant,similarity,t,p\n";
  out << std::setprecision(10);
  for (const StateResult& s : r.states) {
    out << s.state << ',' << s.mean_improvement_pct << ',' << s.sd << ',' << s.p_adj << ','
        << (s.significant ? "true" : "false") << ',' << s.similarity << ',' << s.t << ',' << s.p << '\n';
  }
}

}  // namespace repsample
