#pragma once

// Synthetic census-like populations: a grouped mixture of clipped Gaussian
// continuous features and group-dependent Bernoulli features, with a
// log-linear income target. Shift profiles generate further "states" from
// the same generator with changed group mix and feature means.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "repsample/dataset.hpp"

namespace repsample {

struct SyntheticFeature {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;  // continuous or binary
  double min = -INFINITY;                      // clip range (continuous)
  double max = INFINITY;
  std::vector<std::string> categories;         // binary: {negative, positive}
};

struct SyntheticGroup {
  std::string label;
  double proportion = 0.0;
  std::map<std::string, double> mean;     // continuous feature -> mean
  Eigen::MatrixXd covariance;             // over continuous features, spec order
  std::map<std::string, double> p;        // binary feature -> P(positive)
  double effect = 0.0;                    // additive term on the log target
};

enum class TermTransform { linear, square, log };

struct TargetTerm {
  std::string feature;
  TermTransform transform = TermTransform::linear;
  double coefficient = 0.0;
};

struct ShiftProfile {
  std::string name;
  // Group proportions become (1 - w) * base + w / groups.
  double mix_uniform = 0.0;
  std::map<std::string, double> mean_shift;  // added to every group's mean
};

struct SyntheticPopulationSpec {
  std::size_t n = 10000;
  std::size_t state_n = 5000;
  std::string group_feature = "RAC1P";
  std::string target = "PINCP";
  bool exp_target = true;  // store exp(linear predictor) so a log transform recovers it
  std::vector<SyntheticFeature> features;
  std::vector<SyntheticGroup> groups;
  double intercept = 0.0;
  std::vector<TargetTerm> terms;
  double noise_sd = 0.0;
  std::vector<ShiftProfile> states;

  /// Throws ConfigError on proportions not summing to one, covariance that
  /// is not symmetric positive semidefinite, or unknown feature names.
  void validate() const;
  Schema schema() const;
  std::size_t continuous_count() const;
};

/// The default desk-scale stand-in for the ACS income data: nine race groups
/// with a long tail, AGEP and WKHP continuous, COW, SCHL, MAR, POBP, RELP and
/// SEX binary, and six further states (two unshifted, four shifted).
SyntheticPopulationSpec census_like_spec(std::size_t n = 10000);

/// Base population followed by one dataset per shift profile. Deterministic
/// in (spec, seed).
std::vector<TabularDataset> generate_synthetic_population(const SyntheticPopulationSpec& spec, std::uint64_t seed);

/// One population drawn from the generator under `shift` (nullptr for
/// the base distribution).
TabularDataset generate_state(const SyntheticPopulationSpec& spec, const ShiftProfile* shift, std::size_t n,
                              std::uint64_t seed, std::string source_id);

SyntheticPopulationSpec parse_synthetic_spec(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticPopulationSpec& spec);

}  // namespace repsample
