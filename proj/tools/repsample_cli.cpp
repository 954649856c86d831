// repsample command line: draw samples, evaluate them, run the experiment
// protocol, generate synthetic populations and write datasheets.
//
// Exit codes: 0 success, 2 configuration error, 3 data error.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "repsample/config.hpp"
#include "repsample/coverage.hpp"
#include "repsample/csv.hpp"
#include "repsample/datasheet.hpp"
#include "repsample/dpp.hpp"
#include "repsample/error.hpp"
#include "repsample/experiment.hpp"
#include "repsample/fairness.hpp"
#include "repsample/reflection.hpp"
#include "repsample/representatives.hpp"
#include "repsample/samplers.hpp"
#include "repsample/synthetic.hpp"

namespace fs = std::filesystem;
using namespace repsample;

namespace {

constexpr int kConfigError = 2;
constexpr int kDataError = 3;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

void write_json(const std::string& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Data config plus the raw JSON it came from (which may carry extra keys).
struct LoadedConfig {
  DataConfig data;
  nlohmann::json raw;
};

LoadedConfig load_data_config(const std::string& path) {
  if (path.empty()) return {income_data_config(), nlohmann::json::object()};
  nlohmann::json raw = load_json(path);
  return {parse_data_config(raw), raw};
}

TabularDataset load_population(const std::string& data, const LoadedConfig& cfg, bool verbose = true) {
  IngestResult r = ingest_csv(data, cfg.data.schema, cfg.data.filters);
  if (verbose) {
    std::cerr << "read " << r.report.raw_rows << " rows, kept " << r.report.kept_rows << " (missing "
              << r.report.missing_rows;
    for (const auto& [rule, n] : r.report.dropped_per_rule) std::cerr << ", " << rule << ": " << n;
    std::cerr << ")\n";
  }
  return std::move(r.dataset);
}

std::vector<StrataKey> strata_from(const nlohmann::json& raw) {
  if (!raw.contains("strata")) return default_strata_keys();
  std::vector<StrataKey> keys;
  for (const auto& k : raw.at("strata")) {
    keys.push_back({k.at("feature").get<std::string>(), k.value("edges", std::vector<double>{})});
  }
  return keys;
}

void write_reports(const std::string& out, const std::vector<MetricReport>& reports) {
  if (out.size() > 4 && out.substr(out.size() - 4) == ".csv") {
    std::ostringstream s;
    write_csv(std::span<const MetricReport>(reports), s);
    write_text(out, s.str());
  } else {
    write_json(out, to_json(std::span<const MetricReport>(reports)));
  }
}

struct ExperimentArgs {
  std::string config;
  std::string out;
  std::string data_dir;
  std::string train_state = "CA";
  unsigned threads = 0;
};

ExperimentConfig load_experiment(const ExperimentArgs& a) {
  const fs::path cfg_path(a.config);
  ExperimentConfig cfg = parse_experiment_config(load_json(cfg_path), cfg_path.parent_path());
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (a.threads > 0) cfg.threads = a.threads;
  if (!a.data_dir.empty()) {
    const fs::path dir(a.data_dir);
    if (!fs::is_directory(dir)) throw DataError("data directory '" + a.data_dir + "' does not exist");
    cfg.data.synthetic.reset();
    cfg.data.train_csv = dir / (a.train_state + ".csv");
    if (!fs::exists(cfg.data.train_csv)) throw DataError("no '" + cfg.data.train_csv.string() + "' in the data directory");
    cfg.data.state_csvs.clear();
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".csv" && e.path() != cfg.data.train_csv) cfg.data.state_csvs.push_back(e.path());
    }
    std::sort(cfg.data.state_csvs.begin(), cfg.data.state_csvs.end());
    if (!cfg.data.data_config) cfg.data.data_config = income_data_config();
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Representative sampling toolkit: sampling, representativity metrics and experiments"};
  app.require_subcommand(1);

  // sample
  auto* sample = app.add_subcommand("sample", "Draw a sample and write its indices with provenance");
  std::string method;
  std::size_t size = 0;
  double frac = 0.0;
  std::uint64_t seed = 0;
  std::string config_path;
  std::string data_path;
  std::string out_path;
  std::size_t knn = 5;
  double temperature = 1.0;
  std::size_t batch = 0;
  sample->add_option("--method", method, "srs | stratified | density | kdpp")
      ->required()
      ->check(CLI::IsMember({"srs", "stratified", "density", "kdpp"}));
  auto* size_opt = sample->add_option("--size", size, "Sample size");
  auto* frac_opt = sample->add_option("--frac", frac, "Sample size as a fraction of the population");
  size_opt->excludes(frac_opt);
  sample->add_option("--seed", seed, "Random seed");
  sample->add_option("--config", config_path, "Data config JSON (features, filters, strata)");
  sample->add_option("--data", data_path, "Population CSV")->required();
  sample->add_option("--out", out_path, "Output JSON (default stdout)");
  sample->add_option("--k", knn, "Density sampler: neighbours");
  sample->add_option("--temperature", temperature, "Density sampler: weight exponent");
  sample->add_option("--batch", batch, "k-DPP: batch size (0 = kernel rank)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate samples or predictions");
  evaluate->require_subcommand(1);
  std::string sample_path;
  std::vector<std::string> sample_paths;
  std::string features;
  bool force = false;
  std::string group_by;
  std::string center = "mean";
  std::string pred_path;

  auto* ev_reflection = evaluate->add_subcommand("reflection", "KS, Wasserstein-1 and mean comparison per feature");
  ev_reflection->add_option("--sample", sample_path)->required();
  ev_reflection->add_option("--data", data_path)->required();
  ev_reflection->add_option("--config", config_path);
  ev_reflection->add_option("--features", features, "Comma-separated features (default: every model input)");
  ev_reflection->add_option("--out", out_path, "Output JSON, or CSV when the name ends in .csv");

  auto* ev_coverage = evaluate->add_subcommand("coverage", "Combinatorial and geometric diversity");
  ev_coverage->add_option("--samples", sample_paths)->required();
  ev_coverage->add_option("--data", data_path)->required();
  ev_coverage->add_option("--config", config_path);
  ev_coverage->add_option("--features", features, "Categorical features for entropy (default: all categorical inputs)");
  ev_coverage->add_flag("--force", force, "Compare geometric diversity across sample sizes");
  ev_coverage->add_option("--out", out_path);

  auto* ev_reps = evaluate->add_subcommand("representatives", "Per-group center, medoid and dispersion");
  ev_reps->add_option("--data", data_path)->required();
  ev_reps->add_option("--group-by", group_by, "Comma-separated categorical features")->required();
  ev_reps->add_option("--config", config_path, "Data config (default: inferred from the CSV)");
  ev_reps->add_option("--center", center)->check(CLI::IsMember({"mean", "median"}));
  ev_reps->add_option("--out", out_path);

  auto* ev_fair = evaluate->add_subcommand("fairness", "RDD/REOD or CDD/CEOD of predictions");
  ev_fair->add_option("--pred", pred_path, "CSV with columns y_hat, y, a")->required();
  ev_fair->add_option("--config", config_path);
  ev_fair->add_option("--out", out_path);

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Cross-validation and out-of-distribution experiments");
  experiment->require_subcommand(1);
  ExperimentArgs ea;
  auto add_experiment_options = [&](CLI::App* sub) {
    sub->add_option("--config", ea.config, "Experiment config JSON")->required();
    sub->add_option("--out", ea.out, "Output directory (overrides output_dir)");
    sub->add_option("--data-dir", ea.data_dir, "Directory of preprocessed state CSVs (replaces synthetic data)");
    sub->add_option("--train-state", ea.train_state, "Training state file stem within --data-dir");
    sub->add_option("--threads", ea.threads, "Worker threads");
  };
  auto* ex_cv = experiment->add_subcommand("cv", "k-fold comparison of training conditions");
  add_experiment_options(ex_cv);
  auto* ex_ood = experiment->add_subcommand("ood", "Baseline vs coverage models on other states");
  add_experiment_options(ex_ood);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic population and shifted states");
  std::string spec_path = "census_like";
  std::size_t synth_n = 0;
  synth->add_option("--spec", spec_path, "Spec JSON, or census_like");
  synth->add_option("--out", out_path, "Output directory")->required();
  synth->add_option("--seed", seed);
  synth->add_option("--n", synth_n, "Override the base population size");

  // datasheet
  auto* datasheet = app.add_subcommand("datasheet", "Markdown datasheet for a sampling run");
  std::string run_path;
  std::string purpose;
  datasheet->add_option("--run", run_path, "Run description or experiment summary.json")->required();
  datasheet->add_option("--purpose", purpose, "Purpose statement (overrides the run file)");
  datasheet->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*sample) {
      if (size_opt->count() == 0 && frac_opt->count() == 0) throw ConfigError("give --size or --frac");
      const LoadedConfig cfg = load_data_config(config_path);
      const TabularDataset ds = load_population(data_path, cfg);
      if (frac_opt->count() > 0) {
        if (!(frac > 0.0 && frac <= 1.0)) throw ConfigError("--frac must lie in (0, 1]");
        size = static_cast<std::size_t>(std::floor(frac * static_cast<double>(ds.n_rows())));
      }
      SamplerConfig s;
      s.method = s.label = method;
      s.k = knn;
      s.temperature = temperature;
      s.batch = batch;
      if (method == "stratified") s.strata = strata_from(cfg.raw);
      const FeatureMatrix fm = method == "density" || method == "kdpp" ? encode_matrix(ds, true) : FeatureMatrix{};
      const SampleIndex idx = draw_sample(ds, fm, s, size, seed);
      write_json(out_path, to_json(idx));
    } else if (*ev_reflection) {
      const LoadedConfig cfg = load_data_config(config_path);
      const TabularDataset pop = load_population(data_path, cfg);
      const SampleIndex idx = sample_index_from_json(load_json(sample_path));
      const TabularDataset sub = extract(pop, idx);
      const std::vector<std::string> names = split_list(features);
      std::vector<MetricReport> reports = reflection_report(sub, pop, names, idx.provenance.sampler);
      for (MetricReport& r : reports) r.provenance = idx.provenance;
      write_reports(out_path, reports);
    } else if (*ev_coverage) {
      const LoadedConfig cfg = load_data_config(config_path);
      const TabularDataset pop = load_population(data_path, cfg);
      const FeatureMatrix fm = encode_matrix(pop, true);
      std::vector<LabeledSample> samples;
      for (const std::string& p : sample_paths) {
        samples.push_back({fs::path(p).stem().string(), sample_index_from_json(load_json(p))});
      }
      std::vector<std::string> names = split_list(features);
      if (names.empty()) {
        for (const FeatureSpec& f : pop.schema().features()) {
          if (f.is_categorical() && f.is_model_input()) names.push_back(f.name);
        }
      }
      write_reports(out_path, coverage_report(samples, pop, fm, names, force));
    } else if (*ev_reps) {
      LoadedConfig cfg;
      if (config_path.empty()) {
        cfg.data.schema = infer_schema(read_text_file(data_path));
      } else {
        cfg = load_data_config(config_path);
      }
      const TabularDataset pop = load_population(data_path, cfg);
      const FeatureMatrix fm = encode_matrix(pop, true);
      const std::vector<std::string> keys = split_list(group_by);
      const auto reps = compute_representatives(pop, keys, fm, center == "median" ? CenterMode::median : CenterMode::mean);
      nlohmann::json out = nlohmann::json::array();
      for (const GroupRepresentative& r : reps) out.push_back(to_json(r));
      write_json(out_path, {{"group_by", keys}, {"center", center}, {"representatives", out}});
    } else if (*ev_fair) {
      const nlohmann::json raw = config_path.empty() ? nlohmann::json::object() : load_json(config_path);
      const PredictionTriple pt = read_predictions_csv(pred_path);
      const GroupSelector major = parse_group_selector(raw.value("group_major", nlohmann::json("1")));
      const GroupSelector minor = parse_group_selector(raw.value("group_minor", nlohmann::json::array({"3", "4", "5"})));
      const std::string task = raw.value("task", "regression");
      std::vector<MetricReport> reports;
      auto add = [&](const char* metric, double v, nlohmann::json extra = nlohmann::json::object()) {
        MetricReport r(metric, raw.value("protected_feature", std::string{}), v);
        r.groups = {major.name, minor.name};
        r.extra = std::move(extra);
        reports.push_back(std::move(r));
      };
      if (task == "regression") {
        add("rdd", rdd(pt, major, minor));
        const std::size_t bins = raw.value("reod_bins", std::size_t{10});
        const std::size_t resamples = raw.value("reod_resamples", std::size_t{10});
        const ReodAggregation agg = parse_reod_aggregation(raw.value("reod_aggregation", std::string("max")));
        const ReodResult eo = reod(pt, major, minor, bins, resamples, raw.value("seed", std::uint64_t{0}), agg);
        add("reod", eo.value,
            {{"bins", bins}, {"resamples", resamples}, {"aggregation", to_string(agg)}, {"cell_coverage", eo.coverage}});
      } else if (task == "classification") {
        add("cdd", cdd(pt, major, minor));
        add("ceod", ceod(pt, major, minor));
      } else {
        throw ConfigError("task must be regression or classification");
      }
      write_reports(out_path, reports);
    } else if (*ex_cv) {
      const ExperimentConfig cfg = load_experiment(ea);
      const std::vector<TabularDataset> data = load_experiment_data(cfg);
      const CvResult r = run_cv_experiment(data.front(), cfg);
      write_json((cfg.output_dir / "summary.json").string(), to_json(r, cfg, data.front()));
      std::cerr << "wrote " << (cfg.output_dir / "summary.json").string() << "\n";
    } else if (*ex_ood) {
      const ExperimentConfig cfg = load_experiment(ea);
      const std::vector<TabularDataset> data = load_experiment_data(cfg);
      if (data.size() < 2) throw ConfigError("the OOD experiment needs at least one state besides the training state");
      const std::vector<TabularDataset> others(data.begin() + 1, data.end());
      const OodResult r = run_ood_experiment(data.front(), others, cfg);
      std::ostringstream csv;
      write_per_state_csv(r, csv);
      write_text((cfg.output_dir / "per_state.csv").string(), csv.str());
      write_json((cfg.output_dir / "ood.json").string(), to_json(r, cfg));
      std::cerr << "wrote " << (cfg.output_dir / "per_state.csv").string() << "\n";
    } else if (*synth) {
      SyntheticPopulationSpec spec =
          spec_path == "census_like" ? census_like_spec() : parse_synthetic_spec(load_json(spec_path));
      if (synth_n > 0) {
        spec.n = synth_n;
        spec.state_n = synth_n / 2;
      }
      const fs::path dir(out_path);
      fs::create_directories(dir);
      for (const TabularDataset& ds : generate_synthetic_population(spec, seed)) {
        write_csv(ds, dir / (ds.source_id() + ".csv"));
      }
      write_json((dir / "data_config.json").string(), {{"features", to_json(spec.schema())}});
      write_json((dir / "spec.json").string(), to_json(spec));
    } else if (*datasheet) {
      DatasheetInput in = parse_datasheet_input(load_json(run_path));
      if (!purpose.empty()) in.purpose = purpose;
      write_text(out_path, emit_datasheet(in));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  }
  return 0;
}
