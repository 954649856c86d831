#include "repsample/coverage.hpp"

#include <cmath>
#include <limits>

#include "repsample/error.hpp"

namespace repsample {

std::string_view to_string(DiversityBasis basis) { return basis == DiversityBasis::primal ? "primal" : "dual"; }

double combinatorial_diversity(std::span<const double> shares) {
  double h = 0.0;
  for (double s : shares) {
    if (s < 0.0) throw ConfigError("negative category share");
    if (s > 0.0) h -= s * std::log(s);
  }
  return h;
}

double combinatorial_diversity(const TabularDataset& ds, std::span<const std::size_t> rows, std::string_view feature) {
  const std::size_t j = ds.schema().index_of(feature);
  const FeatureSpec& f = ds.schema()[j];
  if (!f.is_categorical()) throw ConfigError("combinatorial diversity needs a categorical feature, not '" + f.name + "'");
  if (rows.empty()) throw ConfigError("combinatorial diversity of an empty sample");
  std::vector<double> shares(f.categories.size(), 0.0);
  const auto codes = ds.codes(j);
  for (std::size_t r : rows) {
    if (r >= ds.n_rows()) throw ConfigError("row index out of range");
    shares[static_cast<std::size_t>(codes[r])] += 1.0;
  }
  for (double& s : shares) s /= static_cast<double>(rows.size());
  return combinatorial_diversity(shares);
}

GeometricDiversity geometric_diversity(const Eigen::MatrixXd& d, std::optional<DiversityBasis> basis) {
  GeometricDiversity g;
  g.n = static_cast<std::size_t>(d.rows());
  g.p = static_cast<std::size_t>(d.cols());
  if (g.n == 0) throw ConfigError("geometric diversity of an empty sample");
  g.basis = basis.value_or(g.n <= g.p ? DiversityBasis::primal : DiversityBasis::dual);

  // Primal: det(D D^T) over the n row vectors = prod R_ii^2 from QR of D^T.
  // Dual:   det(D^T D) over the p columns     = prod R_ii^2 from QR of D.
  const Eigen::MatrixXd block = g.basis == DiversityBasis::primal ? Eigen::MatrixXd(d.transpose()) : d;
  const Eigen::Index dim = block.cols();
  if (block.rows() < dim) {
    // More vectors than ambient dimensions: the Gram matrix is singular.
    g.log_volume = -std::numeric_limits<double>::infinity();
    g.volume = 0.0;
    return g;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(block);
  if (qr.rank() < dim) {
    g.log_volume = -std::numeric_limits<double>::infinity();
    g.volume = 0.0;
    return g;
  }
  const Eigen::MatrixXd& r = qr.matrixQR();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i) log_det += 2.0 * std::log(std::fabs(r(i, i)));
  g.log_volume = 0.5 * log_det;
  g.volume = std::exp(g.log_volume);
  return g;
}

GeometricDiversity geometric_diversity(const FeatureMatrix& fm, std::span<const std::size_t> rows,
                                       std::optional<DiversityBasis> basis) {
  for (std::size_t r : rows) {
    if (r >= fm.rows()) throw ConfigError("row index out of range");
  }
  return geometric_diversity(fm.select_rows(rows).values, basis);
}

std::vector<MetricReport> coverage_report(std::span<const LabeledSample> samples, const TabularDataset& ds,
                                          const FeatureMatrix& fm, std::span<const std::string> categorical_features,
                                          bool force) {
  if (fm.rows() != ds.n_rows()) throw ConfigError("feature matrix does not match the dataset");
  for (const LabeledSample& s : samples) {
    if (s.sample.parent_id != ds.id()) throw ConfigError("sample '" + s.label + "' belongs to another dataset");
    if (!force && s.sample.indices.size() != samples.front().sample.indices.size()) {
      throw ConfigError("geometric diversity compares volumes of different dimension for samples of different "
                        "size; pass force to report anyway");
    }
  }
  std::vector<MetricReport> out;
  for (const LabeledSample& s : samples) {
    for (const std::string& feature : categorical_features) {
      MetricReport r{"combinatorial_diversity", feature, combinatorial_diversity(ds, s.sample.indices, feature)};
      r.sample = s.label;
      r.provenance = s.sample.provenance;
      out.push_back(std::move(r));
    }
    const GeometricDiversity g = geometric_diversity(fm, s.sample.indices);
    MetricReport r{"geometric_diversity_log", "", g.log_volume};
    r.sample = s.label;
    r.provenance = s.sample.provenance;
    r.extra = {{"basis", to_string(g.basis)}, {"volume", json_number(g.volume)}, {"n", g.n}, {"p", g.p}};
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace repsample
