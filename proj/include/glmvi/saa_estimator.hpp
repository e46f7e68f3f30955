#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "glmvi/glm_model.hpp"
#include "glmvi/links.hpp"
#include "glmvi/vi_core.hpp"

namespace glmvi {

// Empirical field G(z) = (1/K) sum_k [eta_k f(eta_k^T z) - eta_k y_k], stored
// in packed form: regressor columns side by side so evaluation is two matrix
// products regardless of the label dimension.
struct EmpiricalField {
  Link link = Link::Logistic;
  int n = 0;
  int K = 0;
  Mat etas;  // n x (m K)
  Vec ys;    // m K

  VectorField as_field() const {
    VectorField f;
    f.dim = n;
    f.eval = [link = link, K = K, etas = etas, ys = ys](const Vec& z) -> Vec {
      Vec u = etas.transpose() * z;
      for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = eval_link(link, u[j]) - ys[j];
      return etas * u / K;
    };
    return f;
  }
};

inline EmpiricalField empirical_field(const std::vector<Observation>& observations, Link link) {
  if (observations.empty()) throw std::invalid_argument("empirical_field: no observations");
  const int n = static_cast<int>(observations.front().eta.rows());
  const int m = static_cast<int>(observations.front().eta.cols());
  EmpiricalField field;
  field.link = link;
  field.n = n;
  field.K = static_cast<int>(observations.size());
  field.etas.resize(n, static_cast<Eigen::Index>(m) * field.K);
  field.ys.resize(static_cast<Eigen::Index>(m) * field.K);
  for (int k = 0; k < field.K; ++k) {
    const Observation& obs = observations[k];
    if (obs.eta.rows() != n || obs.eta.cols() != m || obs.y.size() != m)
      throw std::invalid_argument("empirical_field: inconsistent observation dimensions");
    field.etas.middleCols(static_cast<Eigen::Index>(m) * k, m) = obs.eta;
    field.ys.segment(static_cast<Eigen::Index>(m) * k, m) = obs.y;
  }
  return field;
}

// Gradient of the empirical logistic negative log-likelihood
// (1/K) sum_k [ln(1+exp(eta_k^T z)) - y_k eta_k^T z]; coincides with the
// empirical field for the logistic link, which is what makes that estimate a
// maximum-likelihood estimate.
inline Vec logistic_nll_gradient(const std::vector<Observation>& observations, const Vec& z) {
  if (observations.empty()) throw std::invalid_argument("logistic_nll_gradient: no observations");
  const int n = static_cast<int>(observations.front().eta.rows());
  if (z.size() != n) throw std::invalid_argument("logistic_nll_gradient: dimension mismatch");
  Vec grad = Vec::Zero(n);
  for (const Observation& obs : observations) {
    if (obs.eta.cols() != 1) throw std::invalid_argument("logistic_nll_gradient: scalar labels only");
    double y = obs.y[0];
    if (!(y >= 0.0 && y <= 1.0))
      throw std::invalid_argument("logistic_nll_gradient: labels must lie in [0,1]");
    double u = obs.eta.col(0).dot(z);
    grad += (eval_link(Link::Logistic, u) - y) * obs.eta.col(0);
  }
  return grad / static_cast<double>(observations.size());
}

struct SaaResult {
  Vec estimate;
  double kappa_emp = 0.0;   // estimated modulus of the empirical field
  double lipschitz = 0.0;   // estimated Lipschitz constant (inflated)
  bool degenerate = false;  // modulus below floor; diminishing-step fallback ran
  bool converged = false;
  int iterations = 0;
};

// Estimate = weak solution of the VI with the empirical field over the set.
// kappa_hint > 0 overrides the internally estimated modulus (500 pairs).  A
// modulus below 1e-6 flags the degenerate fallback (the empirical field need
// not be strongly monotone at small K).
inline SaaResult solve_saa(const std::vector<Observation>& observations, Link link,
                           const ConvexCompactSet& set, double kappa_hint = 0.0,
                           double tol = 1e-8, int max_iters = 200000,
                           const Vec* start = nullptr) {
  VectorField field = empirical_field(observations, link).as_field();
  const std::uint64_t probe_seed = 0x5aa9a175ULL;
  SaaResult res;
  res.kappa_emp = kappa_hint > 0.0
                      ? kappa_hint
                      : estimate_modulus(field, set, 500, probe_seed).modulus_lower;
  res.lipschitz = std::max(estimate_lipschitz(field, set, 200, probe_seed + 1), 1e-8);
  SolveResult sol = solve_strongly_monotone_vi(field, set, std::max(res.kappa_emp, 0.0),
                                               res.lipschitz, tol, max_iters, start);
  res.estimate = std::move(sol.z);
  res.degenerate = sol.degenerate;
  res.converged = sol.converged;
  res.iterations = sol.iterations;
  return res;
}

}  // namespace glmvi
