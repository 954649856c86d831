#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "repsample/error.hpp"
#include "repsample/modeling.hpp"

using namespace repsample;

namespace {

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(rng);
  return m;
}

Eigen::VectorXd bernoulli_labels(std::mt19937_64& rng, const Eigen::MatrixXd& x, const Eigen::VectorXd& beta) {
  Eigen::VectorXd y(x.rows());
  std::uniform_real_distribution<double> u;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double eta = beta[0] + x.row(i).dot(beta.tail(x.cols()));
    y[i] = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  return y;
}

}  // namespace

TEST_SUITE("modeling") {

TEST_CASE("exact line is interpolated") {
  Eigen::MatrixXd x(5, 1);
  x << 0, 1, 2, 3, 4;
  const Eigen::VectorXd y = (2.0 * x.col(0)).array() + 1.0;
  const LinearModel m = fit_ols(x, y);
  CHECK(m.coefficients[0] == doctest::Approx(1.0));
  CHECK(m.coefficients[1] == doctest::Approx(2.0));
  CHECK(m.residual_mse < 1e-20);
  CHECK(score(m, x, y).mse.value() < 1e-20);
}

TEST_CASE("OLS matches the normal equations") {
  std::mt19937_64 rng(50);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd x = gaussian(rng, 50, 3);
    const Eigen::VectorXd y = gaussian(rng, 50, 1);
    const LinearModel m = fit_ols(x, y);
    CHECK((m.coefficients - oracle::normal_equation_ols(x, y)).cwiseAbs().maxCoeff() < 1e-8);
    // Residuals are orthogonal to every design column.
    const Eigen::VectorXd res = y - m.predict(x);
    CHECK(std::fabs(res.sum()) < 1e-6 * y.norm());
    CHECK((x.transpose() * res).cwiseAbs().maxCoeff() < 1e-6 * y.norm());
  }
}

TEST_CASE("duplicated column: minimum-norm solution with unchanged fit") {
  std::mt19937_64 rng(51);
  const Eigen::MatrixXd base = gaussian(rng, 40, 2);
  const Eigen::VectorXd y = gaussian(rng, 40, 1);
  Eigen::MatrixXd dup(40, 3);
  dup << base, base.col(1);
  const LinearModel full = fit_ols(base, y);
  const LinearModel m = fit_ols(dup, y);
  CHECK(m.rank == 3);
  CHECK_FALSE(m.warnings.empty());
  CHECK((m.predict(dup) - full.predict(base)).cwiseAbs().maxCoeff() < 1e-9);
  // The weight of the duplicated feature is split evenly.
  CHECK(m.coefficients[2] == doctest::Approx(m.coefficients[3]).epsilon(1e-9));
  CHECK(m.coefficients[2] + m.coefficients[3] == doctest::Approx(full.coefficients[2]).epsilon(1e-9));
}

TEST_CASE("OLS fit is invariant under affine reparameterization") {
  std::mt19937_64 rng(52);
  const Eigen::MatrixXd x = gaussian(rng, 60, 3);
  const Eigen::VectorXd y = gaussian(rng, 60, 1);
  Eigen::MatrixXd z = x;
  z.col(0) = 100.0 * z.col(0).array() - 7.0;
  z.col(2) = -0.01 * z.col(2).array() + 3.0;
  CHECK((fit_ols(x, y).predict(x) - fit_ols(z, y).predict(z)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("OLS minimizes training MSE against perturbations") {
  std::mt19937_64 rng(53);
  const Eigen::MatrixXd x = gaussian(rng, 80, 4);
  const Eigen::VectorXd y = gaussian(rng, 80, 1);
  const LinearModel m = fit_ols(x, y);
  const double best = score(m, x, y).mse.value();
  std::normal_distribution<double> n01;
  for (int t = 0; t < 100; ++t) {
    LinearModel p = m;
    for (Eigen::Index k = 0; k < p.coefficients.size(); ++k) p.coefficients[k] += 0.05 * n01(rng);
    CHECK(score(p, x, y).mse.value() >= best);
  }
}

TEST_CASE("OLS needs more rows than parameters") {
  Eigen::MatrixXd x(3, 2);
  x.setRandom();
  CHECK_THROWS_AS(fit_ols(x, Eigen::VectorXd::Ones(3)), ConfigError);
}

TEST_CASE("constant predictor scores the variance") {
  std::mt19937_64 rng(54);
  const Eigen::VectorXd y = gaussian(rng, 30, 1);
  const Eigen::VectorXd pred = Eigen::VectorXd::Constant(30, y.mean());
  CHECK(mean_squared_error(pred, y) == doctest::Approx((y.array() - y.mean()).square().mean()));
}

TEST_CASE("logistic gradient matches finite differences") {
  std::mt19937_64 rng(60);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd x = gaussian(rng, 40, 3);
    Eigen::VectorXd beta(4);
    for (Eigen::Index k = 0; k < 4; ++k) beta[k] = n01(rng);
    const Eigen::VectorXd y = bernoulli_labels(rng, x, beta);
    const Eigen::VectorXd g = logistic_gradient(x, y, beta);
    const Eigen::VectorXd fd = oracle::central_difference(x, y, beta);
    CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
    CHECK(logistic_log_likelihood(x, y, beta) == doctest::Approx(oracle::logistic_loglik(x, y, beta)).epsilon(1e-12));
  }
}

TEST_CASE("logistic fit converges to a stationary point") {
  std::mt19937_64 rng(61);
  const Eigen::MatrixXd x = gaussian(rng, 500, 3);
  Eigen::VectorXd beta(4);
  beta << -0.5, 1.0, -2.0, 0.5;
  const Eigen::VectorXd y = bernoulli_labels(rng, x, beta);
  const LogisticModel m = fit_logistic(x, y);
  CHECK(m.converged);
  CHECK_FALSE(m.separated);
  CHECK(m.gradient_norm < 1e-6 * 500);
  CHECK(logistic_gradient(x, y, m.coefficients).norm() < 1e-6 * 500);
  // Nothing nearby does better.
  std::normal_distribution<double> n01;
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd b = m.coefficients;
    for (Eigen::Index k = 0; k < b.size(); ++k) b[k] += 0.01 * n01(rng);
    CHECK(oracle::logistic_loglik(x, y, b) <= m.log_likelihood + 1e-9);
  }
  const ModelScore s = score(m, x, y);
  CHECK(s.accuracy.value() > 0.6);
}

TEST_CASE("balanced symmetric data gives a zero intercept") {
  Eigen::MatrixXd x(8, 1);
  x << -3, -2, -1, -0.5, 0.5, 1, 2, 3;
  Eigen::VectorXd y(8);
  y << 0, 1, 0, 0, 1, 1, 0, 1;
  const LogisticModel m = fit_logistic(x, y);
  CHECK(m.converged);
  CHECK(std::fabs(m.coefficients[0]) < 1e-8);
}

TEST_CASE("separable data is flagged") {
  Eigen::MatrixXd x(6, 1);
  x << -3, -2, -1, 1, 2, 3;
  Eigen::VectorXd y(6);
  y << 0, 0, 0, 1, 1, 1;
  const LogisticModel m = fit_logistic(x, y);
  CHECK_FALSE(m.converged);
  CHECK(m.separated);
  CHECK(m.predict(x) == y);
}

TEST_CASE("encoded column names") {
  Schema s({{"AGEP", FeatureKind::continuous, {}, FeatureRole::input},
            {"SEX", FeatureKind::binary, {"1", "2"}, FeatureRole::input},
            {"RAC1P", FeatureKind::categorical, {"1", "2", "3"}, FeatureRole::protected_attribute}});
  const TabularDataset ds(s, {{{20, 30}, {}}, {{}, {0, 1}}, {{}, {0, 2}}}, "n");
  const auto names = encoded_column_names(encode_matrix(ds, true), s);
  CHECK(names == std::vector<std::string>{"AGEP", "SEX=2", "RAC1P=1", "RAC1P=2", "RAC1P=3"});
}

}
