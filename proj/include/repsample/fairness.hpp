#pragma once

// Group fairness disparities of model predictions with respect to a
// protected attribute.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace repsample {

// A protected group: one or more attribute labels pooled together.
struct GroupSelector {
  std::string name;
  std::vector<std::string> labels;

  static GroupSelector single(std::string label) { return {label, {label}}; }
  bool contains(const std::string& label) const;
};

struct PredictionTriple {
  std::vector<double> y_hat;
  std::vector<double> y;
  std::vector<std::string> a;

  // Throws ConfigError unless the three vectors have equal length >= 2.
  void validate() const;
  std::vector<std::size_t> members(const GroupSelector& g) const;
};

/// KS distance between the prediction CDFs of two groups.
double rdd(const PredictionTriple& pt, const GroupSelector& group0, const GroupSelector& group1);

/// Max over `groups` of the KS distance between the group's prediction CDF
/// and the CDF of all predictions.
double rdd_pooled(const PredictionTriple& pt, std::span<const GroupSelector> groups);

struct FairDummies {
  std::vector<std::string> a_tilde;
  std::vector<double> bin_edges;       // interior edges; bin b is (e_{b-1}, e_b]
  std::vector<std::int32_t> bin_of;    // bin per observation
  std::size_t n_bins_requested = 0;
  std::size_t n_bins = 0;              // after merging tied quantiles
  std::uint64_t seed = 0;
};

/// Y quantile bins with A permuted uniformly within each bin. Quantile edges
/// that coincide (ties in Y) are merged, so n_bins can be below the request.
FairDummies make_fair_dummies(const PredictionTriple& pt, std::size_t n_bins, std::uint64_t seed);

// How per-cell KS distances combine into one REOD value: their maximum, or
// their mean weighted by the number of group members in the cell. The
// maximum saturates near 1 when a group has only a handful of members per
// bin; the weighted mean stays informative there.
enum class ReodAggregation { max, weighted };
ReodAggregation parse_reod_aggregation(const std::string& text);
std::string_view to_string(ReodAggregation agg);

struct ReodResult {
  double value = 0.0;
  double coverage = 1.0;  // fraction of (bin, group) cells that were nonempty
  std::size_t resamples = 1;
};

/// Aggregate over bins and the two groups of the KS distance between
/// predictions with A in the group and predictions with A~ in the group,
/// within the bin. Cells where either side is empty are skipped.
ReodResult reod(const PredictionTriple& pt, const FairDummies& fd, const GroupSelector& group0,
                const GroupSelector& group1, ReodAggregation agg = ReodAggregation::max);

/// reod averaged over `resamples` fair-dummy draws with seeds derived from
/// `seed`.
ReodResult reod(const PredictionTriple& pt, const GroupSelector& group0, const GroupSelector& group1,
                std::size_t n_bins = 10, std::size_t resamples = 10, std::uint64_t seed = 0,
                ReodAggregation agg = ReodAggregation::max);

/// |P(Y^=1 | group0) - P(Y^=1 | group1)| for 0/1 predictions.
double cdd(const PredictionTriple& pt, const GroupSelector& group0, const GroupSelector& group1);

/// |TPR(group0) - TPR(group1)| for 0/1 predictions and targets.
double ceod(const PredictionTriple& pt, const GroupSelector& group0, const GroupSelector& group1);

// Reads a predictions CSV with columns y_hat, y, a.
PredictionTriple read_predictions_csv(const std::string& path);

GroupSelector parse_group_selector(const nlohmann::json& j);

}  // namespace repsample
