#pragma once

// Independent reference computations used by the tests. None of these call
// into the library's algorithms: they solve the same problems by slower,
// more direct routes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>

namespace oracle {

// Minimum-cost transport between two discrete measures on the real line with
// ground cost |x - y|, solved as a min-cost flow by successive shortest paths
// (Bellman-Ford on the residual graph). Masses are integers so every
// augmentation is exact; the result is the cost per unit of mass.
inline double transport_lp(const std::vector<double>& xa, const std::vector<long long>& ma,
                           const std::vector<double>& xb, const std::vector<long long>& mb) {
  const std::size_t m = xa.size();
  const std::size_t n = xb.size();
  const std::size_t source = m + n;
  const std::size_t sink = m + n + 1;
  const std::size_t nodes = m + n + 2;
  struct Edge {
    std::size_t to;
    long long cap;
    double cost;
    std::size_t rev;
  };
  std::vector<std::vector<Edge>> g(nodes);
  auto add = [&](std::size_t u, std::size_t v, long long cap, double cost) {
    g[u].push_back({v, cap, cost, g[v].size()});
    g[v].push_back({u, 0, -cost, g[u].size() - 1});
  };
  const long long total = std::accumulate(ma.begin(), ma.end(), 0LL);
  for (std::size_t i = 0; i < m; ++i) add(source, i, ma[i], 0.0);
  for (std::size_t j = 0; j < n; ++j) add(m + j, sink, mb[j], 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) add(i, m + j, total, std::fabs(xa[i] - xb[j]));
  }
  double cost = 0.0;
  while (true) {
    std::vector<double> dist(nodes, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> prev_node(nodes, nodes);
    std::vector<std::size_t> prev_edge(nodes, 0);
    dist[source] = 0.0;
    for (std::size_t it = 0; it < nodes; ++it) {
      bool changed = false;
      for (std::size_t u = 0; u < nodes; ++u) {
        if (!std::isfinite(dist[u])) continue;
        for (std::size_t e = 0; e < g[u].size(); ++e) {
          const Edge& ed = g[u][e];
          if (ed.cap > 0 && dist[u] + ed.cost < dist[ed.to] - 1e-12) {
            dist[ed.to] = dist[u] + ed.cost;
            prev_node[ed.to] = u;
            prev_edge[ed.to] = e;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (!std::isfinite(dist[sink])) break;
    long long push = std::numeric_limits<long long>::max();
    for (std::size_t v = sink; v != source; v = prev_node[v]) push = std::min(push, g[prev_node[v]][prev_edge[v]].cap);
    for (std::size_t v = sink; v != source; v = prev_node[v]) {
      Edge& ed = g[prev_node[v]][prev_edge[v]];
      ed.cap -= push;
      g[v][ed.rev].cap += push;
    }
    cost += static_cast<double>(push) * dist[sink];
  }
  return cost / static_cast<double>(total);
}

// Uniform-weight empirical measures of two samples: each point of a carries
// |b| units and each point of b carries |a| units.
inline double transport_lp(const std::vector<double>& a, const std::vector<double>& b) {
  return transport_lp(a, std::vector<long long>(a.size(), static_cast<long long>(b.size())), b,
                      std::vector<long long>(b.size(), static_cast<long long>(a.size())));
}

// All k-subsets of {0..n-1} in lexicographic order.
inline std::vector<std::vector<std::size_t>> subsets(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> s(k);
  std::iota(s.begin(), s.end(), std::size_t{0});
  if (k > n) return out;
  while (true) {
    out.push_back(s);
    std::size_t i = k;
    while (i > 0 && s[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++s[i - 1];
    for (std::size_t j = i; j < k; ++j) s[j] = s[j - 1] + 1;
  }
  return out;
}

// k-DPP law by enumeration: P(S) = det(L_S) / sum_T det(L_T).
inline std::vector<double> kdpp_probabilities(const Eigen::MatrixXd& l, const std::vector<std::vector<std::size_t>>& sets) {
  std::vector<double> p;
  double total = 0.0;
  for (const auto& s : sets) {
    Eigen::MatrixXd sub(s.size(), s.size());
    for (std::size_t a = 0; a < s.size(); ++a) {
      for (std::size_t b = 0; b < s.size(); ++b) sub(a, b) = l(s[a], s[b]);
    }
    const double d = std::max(0.0, sub.fullPivLu().determinant());
    p.push_back(d);
    total += d;
  }
  for (double& x : p) x /= total;
  return p;
}

// Pearson chi-square goodness-of-fit p-value. Cells with expected count
// below 5 are pooled into one cell.
inline double chi_square_p(const std::vector<double>& observed, const std::vector<double>& probs, double draws) {
  double stat = 0.0;
  double pooled_obs = 0.0;
  double pooled_exp = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double e = probs[i] * draws;
    if (e < 5.0) {
      pooled_obs += observed[i];
      pooled_exp += e;
      continue;
    }
    stat += (observed[i] - e) * (observed[i] - e) / e;
    ++cells;
  }
  if (pooled_exp > 0.0) {
    stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++cells;
  } else if (pooled_obs > 0.0) {
    return 0.0;  // draws landed on zero-probability subsets
  }
  if (cells < 2) return 1.0;
  boost::math::chi_squared dist(static_cast<double>(cells - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Least squares through the normal equations with an intercept column.
inline Eigen::VectorXd normal_equation_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::MatrixXd a(x.rows(), x.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(x.cols()) = x;
  return (a.transpose() * a).ldlt().solve(a.transpose() * y);
}

// Bernoulli log-likelihood written out term by term.
inline double logistic_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double eta = beta[0];
    for (Eigen::Index j = 0; j < x.cols(); ++j) eta += beta[j + 1] * x(i, j);
    const double p = 1.0 / (1.0 + std::exp(-eta));
    ll += y[i] > 0.5 ? std::log(p) : std::log(1.0 - p);
  }
  return ll;
}

inline Eigen::VectorXd central_difference(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                                          double h = 1e-5) {
  Eigen::VectorXd g(beta.size());
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    Eigen::VectorXd up = beta;
    Eigen::VectorXd down = beta;
    up[k] += h;
    down[k] -= h;
    g[k] = (logistic_loglik(x, y, up) - logistic_loglik(x, y, down)) / (2.0 * h);
  }
  return g;
}

// Benjamini-Hochberg by the textbook definition: adj_(i) = min_{j >= i} p_(j) m / j.
inline std::vector<double> bh_reference(const std::vector<double>& p) {
  const std::size_t m = p.size();
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    double best = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (p[j] < p[i]) continue;
      // rank of p[j] = number of values <= p[j]
      std::size_t rank = 0;
      for (double q : p) rank += q <= p[j] ? 1 : 0;
      best = std::min(best, p[j] * static_cast<double>(m) / static_cast<double>(rank));
    }
    out[i] = best;
  }
  return out;
}

}  // namespace oracle
