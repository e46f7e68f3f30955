#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace glmvi {

// Gauss-Hermite rule for the physicists' weight exp(-x^2).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Golub-Welsch: nodes are the eigenvalues of the symmetric tridiagonal Jacobi
// matrix (zero diagonal, off-diagonal sqrt(k/2)), weights come from the first
// eigenvector components scaled by mu0 = integral of the weight = sqrt(pi).
inline GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: need at least one node");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double b = std::sqrt(k / 2.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  const double mu0 = std::sqrt(M_PI);
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()[i];
    double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

inline const GaussHermiteRule& gauss_hermite_cached(int n) {
  static std::mutex mu;
  static std::map<int, GaussHermiteRule> cache;
  std::scoped_lock lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_hermite(n)).first;
  return it->second;  // map nodes are stable; nothing is ever erased
}

// E_{zeta ~ N(0,1)} g(zeta) via the sqrt(2) change of variables.
template <class G>
double expect_std_normal(G&& g, const GaussHermiteRule& rule) {
  const double root2 = std::sqrt(2.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    acc += rule.weights[i] * g(root2 * rule.nodes[i]);
  return acc / std::sqrt(M_PI);
}

template <class G>
double expect_std_normal(G&& g, int nodes = 64) {
  return expect_std_normal(g, gauss_hermite_cached(nodes));
}

// Doubles the node count until two successive rules agree within tol.
template <class G>
double expect_std_normal_adaptive(G&& g, double tol = 1e-8, int start = 64,
                                  int max_nodes = 1024) {
  double prev = expect_std_normal(g, start);
  for (int n = 2 * start; n <= max_nodes; n *= 2) {
    double cur = expect_std_normal(g, n);
    if (std::abs(cur - prev) <= tol) return cur;
    prev = cur;
  }
  return prev;
}

}  // namespace glmvi
