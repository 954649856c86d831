#include "repsample/modeling.hpp"

#include <cmath>

#include "repsample/error.hpp"
#include "repsample/report.hpp"

namespace repsample {
namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd a(x.rows(), x.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(x.cols()) = x;
  return a;
}

Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta) {
  if (beta.size() != x.cols() + 1) throw ConfigError("model has a different number of features than the data");
  return (x * beta.tail(x.cols())).array() + beta[0];
}

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

void check_xy(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw ConfigError("design matrix and target have different lengths");
  if (!x.allFinite() || !y.allFinite()) throw DataError("non-finite value in the model inputs");
}

}  // namespace

Eigen::VectorXd LinearModel::predict(const Eigen::MatrixXd& x) const { return linear_predictor(x, coefficients); }

LinearModel fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  check_xy(x, y);
  if (x.rows() <= x.cols() + 1) {
    throw ConfigError("least squares needs more rows (" + std::to_string(x.rows()) + ") than coefficients + 1 (" +
                      std::to_string(x.cols() + 2) + ")");
  }
  const Eigen::MatrixXd a = with_intercept(x);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  LinearModel m;
  m.coefficients = cod.solve(y);
  m.rank = static_cast<std::size_t>(cod.rank());
  const auto p1 = static_cast<std::size_t>(a.cols());
  if (m.rank < p1) {
    m.warnings.push_back("design matrix has rank " + std::to_string(m.rank) + " < " + std::to_string(p1) +
                         " columns; returned the minimum-norm solution");
  }
  const Eigen::VectorXd d = cod.matrixQTZ().diagonal().cwiseAbs();
  const Eigen::Index r = static_cast<Eigen::Index>(m.rank);
  m.condition_estimate = r > 0 ? d.head(r).maxCoeff() / d.head(r).minCoeff() : INFINITY;
  m.residual_mse = (y - a * m.coefficients).squaredNorm() / static_cast<double>(y.size());
  return m;
}

double logistic_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = linear_predictor(x, beta);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - softplus(eta[i]);
  return ll;
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = linear_predictor(x, beta);
  Eigen::VectorXd resid(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) resid[i] = y[i] - sigmoid(eta[i]);
  Eigen::VectorXd g(beta.size());
  g[0] = resid.sum();
  g.tail(x.cols()) = x.transpose() * resid;
  return g;
}

Eigen::VectorXd LogisticModel::predict_proba(const Eigen::MatrixXd& x) const {
  return linear_predictor(x, coefficients).unaryExpr([](double t) { return sigmoid(t); });
}

Eigen::VectorXd LogisticModel::predict(const Eigen::MatrixXd& x) const {
  return linear_predictor(x, coefficients).unaryExpr([](double t) { return t >= 0.0 ? 1.0 : 0.0; });
}

LogisticModel fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t max_iter, double tol) {
  check_xy(x, y);
  bool has0 = false;
  bool has1 = false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) has0 = true;
    else if (y[i] == 1.0) has1 = true;
    else throw DataError("logistic regression needs 0/1 targets");
  }
  if (!has0 || !has1) throw ConfigError("logistic regression needs both classes in the training data");

  const Eigen::MatrixXd a = with_intercept(x);
  const Eigen::Index p1 = a.cols();
  const double n = static_cast<double>(a.rows());
  LogisticModel m;
  m.coefficients = Eigen::VectorXd::Zero(p1);
  m.log_likelihood = logistic_log_likelihood(x, y, m.coefficients);

  for (m.iterations = 0; m.iterations < max_iter; ++m.iterations) {
    const Eigen::VectorXd eta = a * m.coefficients;
    Eigen::VectorXd prob(eta.size());
    Eigen::VectorXd w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      prob[i] = sigmoid(eta[i]);
      w[i] = prob[i] * (1.0 - prob[i]);
    }
    const Eigen::VectorXd grad = a.transpose() * (y - prob);
    m.gradient_norm = grad.norm();
    if (m.gradient_norm < tol * n) {
      m.converged = true;
      break;
    }
    Eigen::MatrixXd h = a.transpose() * w.asDiagonal() * a;
    h.diagonal().array() += 1e-8;
    Eigen::VectorXd step = h.ldlt().solve(grad);

    // Step-halving keeps the log-likelihood nondecreasing.
    double t = 1.0;
    bool improved = false;
    for (int halvings = 0; halvings < 40; ++halvings, t *= 0.5) {
      const Eigen::VectorXd candidate = m.coefficients + t * step;
      const double ll = logistic_log_likelihood(x, y, candidate);
      if (std::isfinite(ll) && ll >= m.log_likelihood) {
        m.coefficients = candidate;
        m.log_likelihood = ll;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }

  const Eigen::VectorXd eta = a * m.coefficients;
  bool perfect = true;
  for (Eigen::Index i = 0; i < eta.size() && perfect; ++i) {
    perfect = y[i] == 1.0 ? eta[i] > 0.0 : eta[i] < 0.0;
  }
  if (perfect) {
    // Some direction separates the classes, so the likelihood has no maximum.
    m.separated = true;
    m.converged = false;
  }
  m.gradient_norm = logistic_gradient(x, y, m.coefficients).norm();
  return m;
}

double mean_squared_error(const Eigen::VectorXd& prediction, const Eigen::VectorXd& y) {
  if (prediction.size() != y.size() || y.size() == 0) throw ConfigError("MSE needs equal, nonzero lengths");
  return (prediction - y).squaredNorm() / static_cast<double>(y.size());
}

ModelScore score(const LinearModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return {mean_squared_error(m.predict(x), y), std::nullopt};
}

ModelScore score(const LogisticModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (y.size() == 0) throw ConfigError("accuracy of an empty evaluation set");
  const Eigen::VectorXd pred = m.predict(x);
  double hits = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) hits += pred[i] == y[i] ? 1.0 : 0.0;
  return {std::nullopt, hits / static_cast<double>(y.size())};
}

namespace {

nlohmann::json coefficient_json(const Eigen::VectorXd& beta, const std::vector<std::string>& names) {
  nlohmann::json c = nlohmann::json::array();
  for (Eigen::Index i = 1; i < beta.size(); ++i) {
    const auto k = static_cast<std::size_t>(i - 1);
    c.push_back({{"name", k < names.size() ? names[k] : "x" + std::to_string(k)}, {"value", json_number(beta[i])}});
  }
  return c;
}

}  // namespace

nlohmann::json to_json(const LinearModel& m, const std::vector<std::string>& names) {
  return {{"model", "ols"},
          {"intercept", json_number(m.coefficients[0])},
          {"coefficients", coefficient_json(m.coefficients, names)},
          {"residual_mse", json_number(m.residual_mse)},
          {"condition_estimate", json_number(m.condition_estimate)},
          {"rank", m.rank},
          {"warnings", m.warnings}};
}

nlohmann::json to_json(const LogisticModel& m, const std::vector<std::string>& names) {
  return {{"model", "logistic"},
          {"intercept", json_number(m.coefficients[0])},
          {"coefficients", coefficient_json(m.coefficients, names)},
          {"converged", m.converged},
          {"separated", m.separated},
          {"iterations", m.iterations},
          {"log_likelihood", json_number(m.log_likelihood)}};
}

std::vector<std::string> encoded_column_names(const FeatureMatrix& fm, const Schema& schema) {
  std::vector<std::string> names(fm.cols());
  for (const auto& [feature, span] : fm.encoding_map) {
    const FeatureSpec& f = schema[schema.index_of(feature)];
    if (f.kind == FeatureKind::continuous) {
      names[span.first] = feature;
    } else if (f.kind == FeatureKind::binary) {
      names[span.first] = feature + "=" + f.categories[1];
    } else {
      for (std::size_t c = 0; c < span.count; ++c) names[span.first + c] = feature + "=" + f.categories[c];
    }
  }
  return names;
}

}  // namespace repsample
