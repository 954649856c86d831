#pragma once

// Linear and logistic regression with an intercept. Design matrices are
// passed without the intercept column; coefficient vectors hold the
// intercept first.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "repsample/dataset.hpp"

namespace repsample {

struct LinearModel {
  Eigen::VectorXd coefficients;  // p + 1
  double residual_mse = 0.0;
  double condition_estimate = 1.0;  // ratio of extreme |R_ii| of the factorisation
  std::size_t rank = 0;
  std::vector<std::string> warnings;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Least squares through a complete orthogonal decomposition of [1 X]. A
/// rank-deficient design yields the minimum-norm solution and a warning.
/// Requires n > p + 1.
LinearModel fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

struct LogisticModel {
  Eigen::VectorXd coefficients;  // p + 1
  bool converged = false;
  bool separated = false;  // the fit classifies every training row correctly
  std::size_t iterations = 0;
  double log_likelihood = 0.0;
  double gradient_norm = 0.0;

  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;  // 0/1 at probability 0.5
};

/// Maximum likelihood by iteratively reweighted least squares with
/// step-halving and a 1e-8 ridge on the weighted normal system. Converged
/// means |gradient| < tol * n. Perfectly separable data has no maximum:
/// the fit stops with converged = false and separated = true.
LogisticModel fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t max_iter = 100,
                           double tol = 1e-6);

double logistic_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta);
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta);

struct ModelScore {
  std::optional<double> mse;
  std::optional<double> accuracy;
};

ModelScore score(const LinearModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
ModelScore score(const LogisticModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

double mean_squared_error(const Eigen::VectorXd& prediction, const Eigen::VectorXd& y);

// `names` labels the non-intercept coefficients when given.
nlohmann::json to_json(const LinearModel& m, const std::vector<std::string>& names = {});
nlohmann::json to_json(const LogisticModel& m, const std::vector<std::string>& names = {});

/// Name of every encoded column, e.g. "AGEP", "SEX=2", "RAC1P=6".
std::vector<std::string> encoded_column_names(const FeatureMatrix& fm, const Schema& schema);

}  // namespace repsample
