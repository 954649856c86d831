#pragma once

// Diversity of a sample: Shannon entropy over a categorical feature and the
// volume spanned by the sample's feature vectors.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "repsample/dataset.hpp"
#include "repsample/report.hpp"

namespace repsample {

enum class DiversityBasis { primal, dual };
std::string_view to_string(DiversityBasis basis);

struct GeometricDiversity {
  double log_volume = 0.0;  // 0.5 * log det; -inf when singular
  double volume = 0.0;      // exp(log_volume); +inf when not representable
  DiversityBasis basis = DiversityBasis::primal;
  std::size_t n = 0;
  std::size_t p = 0;
};

struct DiversityScore {
  std::map<std::string, double> combinatorial;  // feature -> entropy (nats)
  GeometricDiversity geometric;
};

/// Entropy in nats of the category shares; 0 log 0 = 0.
double combinatorial_diversity(std::span<const double> shares);
double combinatorial_diversity(const TabularDataset& ds, std::span<const std::size_t> rows, std::string_view feature);

/// sqrt(det(G)) in log form for the sample rows of `fm`. By default the n x n
/// primal Gram (rows as vectors) is used when n <= p and the p x p dual
/// matrix otherwise; `basis` forces one. The determinant is accumulated from
/// the diagonal of a pivoted QR factorisation of the data block.
GeometricDiversity geometric_diversity(const FeatureMatrix& fm, std::span<const std::size_t> rows,
                                       std::optional<DiversityBasis> basis = std::nullopt);
GeometricDiversity geometric_diversity(const Eigen::MatrixXd& rows_as_observations,
                                       std::optional<DiversityBasis> basis = std::nullopt);

struct LabeledSample {
  std::string label;
  SampleIndex sample;
};

/// Per-sample combinatorial diversity (each listed categorical feature) and
/// geometric diversity. Geometric scores of different-size samples are not
/// comparable; mixing sizes throws ConfigError unless `force` is set.
std::vector<MetricReport> coverage_report(std::span<const LabeledSample> samples, const TabularDataset& ds,
                                          const FeatureMatrix& fm, std::span<const std::string> categorical_features,
                                          bool force = false);

}  // namespace repsample
