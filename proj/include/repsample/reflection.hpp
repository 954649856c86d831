#pragma once

// Distributional departure between a sample and its population, one feature
// at a time.

#include <span>
#include <string>
#include <vector>

#include "repsample/dataset.hpp"
#include "repsample/report.hpp"
#include "repsample/stats.hpp"

namespace repsample {

class EmpiricalDistribution1D {
 public:
  enum class Kind { continuous, categorical };

  static EmpiricalDistribution1D from_values(std::span<const double> values);
  // `positions` gives each category's location on the real line (ordered
  // codes); `codes` index into it.
  static EmpiricalDistribution1D from_codes(std::span<const std::int32_t> codes, std::span<const double> positions);
  static EmpiricalDistribution1D of_feature(const TabularDataset& ds, std::size_t feature);

  Kind kind() const { return kind_; }
  std::size_t size() const { return n_; }
  bool empty() const { return n_ == 0; }
  // Continuous: sorted observations.
  const std::vector<double>& sorted() const { return sorted_; }
  // Categorical: category positions and probabilities.
  const std::vector<double>& positions() const { return positions_; }
  const std::vector<double>& probabilities() const { return probabilities_; }

 private:
  Kind kind_ = Kind::continuous;
  std::size_t n_ = 0;
  std::vector<double> sorted_;
  std::vector<double> positions_;
  std::vector<double> probabilities_;
};

/// Sup-norm distance between the two empirical CDFs. Throws ConfigError on
/// an empty input or mixed kinds.
double ks_statistic(const EmpiricalDistribution1D& a, const EmpiricalDistribution1D& b);

/// First Wasserstein (earth mover) distance with ground cost |x - y|,
/// computed exactly as the integral of |F_a - F_b| over the merged support.
/// Categorical inputs are compared at their numeric category positions.
double wasserstein1(const EmpiricalDistribution1D& a, const EmpiricalDistribution1D& b);

// Plain-value conveniences.
double ks_statistic(std::span<const double> a, std::span<const double> b);
double wasserstein1(std::span<const double> a, std::span<const double> b);

/// Welch test of mean(sample) == mean(population).
TTestResult mean_comparison(std::span<const double> sample, std::span<const double> population);

/// KS, W1 and the mean comparison for each listed feature (all model input
/// features when `features` is empty). Lower distances mean the sample
/// reflects the population more closely.
std::vector<MetricReport> reflection_report(const TabularDataset& sample, const TabularDataset& population,
                                            std::span<const std::string> features, const std::string& label = {});

}  // namespace repsample
