#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "glmvi/links.hpp"
#include "glmvi/rng.hpp"
#include "glmvi/vi_core.hpp"

namespace glmvi {

// Fixed-design setting: one deterministic regressor matrix eta, one noisy
// observation y = phi(eta^T x) + lambda xi, and the observable field
// F(z) = eta phi(eta^T z).
struct SingleObsModel {
  Mat eta;     // n x K (columns are the design vectors)
  Link phi = Link::Arctan;
  double lambda = 0.0;
};

inline Mat gaussian_ensemble(int n, int K, Rng& rng) {
  if (n < 1 || K < 1) throw std::invalid_argument("gaussian_ensemble: dimensions must be positive");
  return rng.normal_matrix(n, K);
}

inline Vec observe(const SingleObsModel& model, const Vec& x, Rng& rng) {
  if (x.size() != model.eta.rows()) throw std::invalid_argument("observe: dimension mismatch");
  if (!x.allFinite()) throw std::invalid_argument("observe: non-finite signal");
  Vec y = model.eta.transpose() * x;
  for (Eigen::Index j = 0; j < y.size(); ++j) y[j] = eval_link(model.phi, y[j]);
  if (model.lambda != 0.0)
    y += model.lambda * rng.normal_vector(static_cast<int>(model.eta.cols()));
  return y;
}

inline VectorField single_obs_field(const SingleObsModel& model) {
  VectorField f;
  f.dim = static_cast<int>(model.eta.rows());
  f.eval = [eta = model.eta, phi = model.phi](const Vec& z) -> Vec {
    Vec u = eta.transpose() * z;
    for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = eval_link(phi, u[j]);
    return eta * u;
  };
  return f;
}

// G_y(z) = eta phi(eta^T z) - eta y, whose weak solution over the set is the
// estimate.
inline VectorField single_obs_data_field(const SingleObsModel& model, const Vec& y) {
  if (y.size() != model.eta.cols())
    throw std::invalid_argument("single_obs_data_field: dimension mismatch");
  VectorField f;
  f.dim = static_cast<int>(model.eta.rows());
  Vec offset = model.eta * y;
  f.eval = [eta = model.eta, phi = model.phi, offset](const Vec& z) -> Vec {
    Vec u = eta.transpose() * z;
    for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = eval_link(phi, u[j]);
    return eta * u - offset;
  };
  return f;
}

// Certified modulus of F on the ball of the given radius:
// lambda_min(eta eta^T) times the smallest link slope over the attained
// argument range |eta_k^T z| <= max_k ||eta_k|| * radius.  A guaranteed lower
// bound, unlike the sampled estimate, so it is the right constant for
// per-realization error certificates.
inline double certified_kappa(const SingleObsModel& model, double radius) {
  if (radius <= 0.0) throw std::invalid_argument("certified_kappa: radius must be positive");
  Eigen::SelfAdjointEigenSolver<Mat> es(model.eta * model.eta.transpose());
  double lambda_min = std::max(es.eigenvalues().minCoeff(), 0.0);
  double umax = 0.0;
  for (Eigen::Index k = 0; k < model.eta.cols(); ++k)
    umax = std::max(umax, model.eta.col(k).norm() * radius);
  return lambda_min * link_slope_min(model.phi, umax);
}

// kappa^{-1} ||eta (y - phi(eta^T x))||, the per-realization recovery bound.
inline double deterministic_error_bound(const SingleObsModel& model, const Vec& x, const Vec& y,
                                        double kappa) {
  if (kappa <= 0.0) throw std::invalid_argument("deterministic_error_bound: kappa must be positive");
  Vec mean = model.eta.transpose() * x;
  for (Eigen::Index j = 0; j < mean.size(); ++j) mean[j] = eval_link(model.phi, mean[j]);
  return (model.eta * (y - mean)).norm() / kappa;
}

struct SingleObsResult {
  Vec estimate;
  double kappa_est = 0.0;        // sampled modulus used for the solver step
  double kappa_certified = 0.0;  // guaranteed lower bound used for the error bound
  bool converged = false;
  int iterations = 0;
  // Diagnostics available when the true signal is known:
  double residual_norm = std::numeric_limits<double>::quiet_NaN();  // ||eta (y - phi(eta^T x))||
  double bound = std::numeric_limits<double>::quiet_NaN();          // kappa_certified^{-1} * residual_norm
};

inline SingleObsResult solve_single_obs(const SingleObsModel& model, const Vec& y,
                                        const ConvexCompactSet& set, double tol = 1e-8,
                                        int max_iters = 200000) {
  VectorField field = single_obs_data_field(model, y);
  const std::uint64_t probe_seed = 0x516e0b5ULL;
  SingleObsResult res;
  res.kappa_est = estimate_modulus(field, set, 500, probe_seed).modulus_lower;
  res.kappa_certified = certified_kappa(model, set.is_ball ? set.radius : 1.0);
  double lip = std::max(estimate_lipschitz(field, set, 200, probe_seed + 1), 1e-8);
  SolveResult sol = solve_strongly_monotone_vi(field, set, std::max(res.kappa_est, 0.0), lip,
                                               tol, max_iters);
  res.estimate = std::move(sol.z);
  res.converged = sol.converged;
  res.iterations = sol.iterations;
  return res;
}

// Fills the true-signal diagnostics of a solved result.
inline void attach_truth_diagnostics(SingleObsResult& result, const SingleObsModel& model,
                                     const Vec& x, const Vec& y) {
  Vec mean = model.eta.transpose() * x;
  for (Eigen::Index j = 0; j < mean.size(); ++j) mean[j] = eval_link(model.phi, mean[j]);
  result.residual_norm = (model.eta * (y - mean)).norm();
  result.bound = result.kappa_certified > 0.0
                     ? result.residual_norm / result.kappa_certified
                     : std::numeric_limits<double>::infinity();
}

}  // namespace glmvi
