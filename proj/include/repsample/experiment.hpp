#pragma once

// Cross-validated comparison of models trained on the full training fold and
// on samples of it, and the out-of-distribution evaluation of those models on
// other populations ("states").

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repsample/config.hpp"
#include "repsample/dataset.hpp"
#include "repsample/fairness.hpp"
#include "repsample/report.hpp"
#include "repsample/samplers.hpp"
#include "repsample/synthetic.hpp"

namespace repsample {

enum class Task { regression, classification };

struct SamplerConfig {
  std::string label;   // condition name in reports; defaults to the method
  std::string method;  // srs | stratified | density | kdpp
  std::vector<StrataKey> strata;  // stratified; empty = AGEP x SEX x RAC1P
  std::size_t k = 5;              // density neighbours
  double temperature = 1.0;       // density exponent
  std::size_t batch = 0;          // kdpp batch size, 0 = full rank
};

struct ProtectedPairing {
  std::string feature;
  GroupSelector major;
  GroupSelector minor;
};

// Where the experiment data comes from: a synthetic spec, or CSV files read
// through a data config.
struct DataSource {
  std::optional<SyntheticPopulationSpec> synthetic;
  std::uint64_t synthetic_seed = 0;
  std::filesystem::path train_csv;
  std::vector<std::filesystem::path> state_csvs;
  std::optional<DataConfig> data_config;
};

struct ExperimentConfig {
  Task task = Task::regression;
  std::size_t folds = 5;
  std::size_t repetitions = 1;  // independent fold shuffles
  double sample_fraction = 0.20;
  std::vector<SamplerConfig> samplers;
  std::uint64_t seed = 0;
  std::optional<ProtectedPairing> protected_pairing;
  bool log_target = true;             // regression: model log(target)
  double class_threshold = 50000.0;   // classification: target >= threshold
  std::size_t reod_bins = 10;
  std::size_t reod_resamples = 10;
  ReodAggregation reod_aggregation = ReodAggregation::max;
  std::vector<std::string> diversity_features;  // categorical; empty = protected feature
  std::vector<std::string> reflection_features; // empty = every model input
  // OOD: the two training conditions compared on every other state.
  std::string ood_baseline = "stratified";
  std::string ood_coverage = "density";
  double alpha = 0.05;
  unsigned threads = 1;
  DataSource data;
  std::filesystem::path output_dir = ".";
};

/// Parses an experiment config. Relative CSV paths resolve against
/// `base_dir`. Throws ConfigError on invalid values.
ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Loaded and prepared (target-transformed) datasets: the training state
/// first, then the other states.
std::vector<TabularDataset> load_experiment_data(const ExperimentConfig& cfg);

/// Applies the task's target preparation (log for regression when
/// configured, thresholding for classification).
TabularDataset prepare_target(const TabularDataset& ds, const ExperimentConfig& cfg);

/// Fold of every row for a shuffled k-fold split; a function of (n, folds,
/// seed) only.
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed);

SampleIndex draw_sample(const TabularDataset& ds, const FeatureMatrix& fm, const SamplerConfig& s, std::size_t size,
                        std::uint64_t seed);

struct ConditionResult {
  std::string condition;
  std::size_t n_train = 0;
  std::map<std::string, double> metrics;  // mse | accuracy, rdd | cdd, reod | ceod, ...
  std::map<std::string, double> combinatorial;
  std::optional<double> geometric_log;
  std::map<std::string, double> wasserstein1;
  std::map<std::string, double> ks;
  std::optional<Provenance> provenance;
};

struct FoldResult {
  std::size_t repetition = 0;
  std::size_t fold = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<ConditionResult> conditions;  // "full" first, then samplers in config order
  std::vector<std::string> warnings;
};

struct PairedComparison {
  std::string metric;
  std::string a;
  std::string b;
  double mean_diff = 0.0;  // mean(a - b)
  double t = 0.0;
  double p = 1.0;
  double p_adj = 1.0;
  bool significant = false;
};

struct CvResult {
  std::vector<FoldResult> folds;
  std::vector<MetricReport> summary;  // mean and SD per condition and metric
  std::vector<PairedComparison> tests;
};

/// Per fold: fit the full-training model, draw each configured sample of
/// size fraction * |train| from the training rows, fit per-sample models and
/// evaluate every model on the held-out rows. Folds run on `cfg.threads`
/// threads; results do not depend on the thread count.
CvResult run_cv_experiment(const TabularDataset& ds, const ExperimentConfig& cfg);

nlohmann::json to_json(const CvResult& r, const ExperimentConfig& cfg, const TabularDataset& ds);

struct StateResult {
  std::string state;
  bool in_distribution = false;  // the held-out folds of the training state
  double similarity = 0.0;       // Pearson correlation of encoded feature means
  std::vector<double> improvement_pct;  // one value per (repetition, fold)
  double mean_improvement_pct = 0.0;
  double sd = 0.0;
  double t = 0.0;
  double p = 1.0;
  double p_adj = 1.0;
  bool significant = false;
};

struct OodResult {
  std::vector<StateResult> states;  // training state first
  std::vector<std::string> warnings;
  double mean_improvement_pct = 0.0;  // over the other states
  std::size_t improved_states = 0;
  std::size_t significant_states = 0;
};

/// Trains the baseline and coverage conditions on each training fold of
/// `train`, evaluates both on the held-out fold and on every other state,
/// and tests the per-state differences with paired t-tests (BH-adjusted
/// across states). Improvement is relative to the baseline: MSE reduction
/// for regression, accuracy gain for classification, in percent.
OodResult run_ood_experiment(const TabularDataset& train, const std::vector<TabularDataset>& others,
                             const ExperimentConfig& cfg);

/// Correlation between the mean encoded feature vectors of two datasets,
/// each column z-scored with statistics pooled over `universe`.
double state_similarity(const TabularDataset& a, const TabularDataset& b, const std::vector<TabularDataset>& universe);

nlohmann::json to_json(const OodResult& r, const ExperimentConfig& cfg);
// Columns: state,mean_improvement_pct,sd,p_adj,significant,similarity,t,p
void write_per_state_csv(const OodResult& r, std::ostream& out);

}  // namespace repsample
