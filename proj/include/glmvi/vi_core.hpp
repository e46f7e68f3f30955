#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "glmvi/rng.hpp"

namespace glmvi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Single-valued everywhere-defined map R^dim -> R^dim.  All fields built by
// the combinators below preserve monotonicity.
struct VectorField {
  int dim = 0;
  std::function<Vec(const Vec&)> eval;

  Vec operator()(const Vec& z) const { return eval(z); }
};

// Feasible set with a Euclidean projection oracle.  `sample` draws uniformly
// from the set; the ball fields (is_ball/center/radius) let probing code use
// ball-specific pair proposals.
struct ConvexCompactSet {
  int dim = 0;
  std::function<Vec(const Vec&)> project;
  std::function<bool(const Vec&)> contains;
  double diameter_bound = 0.0;
  std::function<Vec(Rng&)> sample;
  bool is_ball = false;
  Vec center;
  double radius = 0.0;
};

inline Vec project_ball(double radius, const Vec& center, const Vec& z) {
  if (radius <= 0.0) throw std::invalid_argument("project_ball: radius must be positive");
  if (!z.allFinite() || !center.allFinite())
    throw std::invalid_argument("project_ball: non-finite point");
  Vec d = z - center;
  double nrm = d.norm();
  if (nrm <= radius) return z;
  return center + (radius / nrm) * d;
}

inline ConvexCompactSet ball_set(int n, double radius = 1.0, Vec center = Vec()) {
  if (n < 1) throw std::invalid_argument("ball_set: dimension must be positive");
  if (radius <= 0.0) throw std::invalid_argument("ball_set: radius must be positive");
  if (center.size() == 0) center = Vec::Zero(n);
  if (center.size() != n) throw std::invalid_argument("ball_set: center dimension mismatch");
  ConvexCompactSet set;
  set.dim = n;
  set.diameter_bound = 2.0 * radius;
  set.is_ball = true;
  set.center = center;
  set.radius = radius;
  set.project = [radius, center](const Vec& z) { return project_ball(radius, center, z); };
  set.contains = [radius, center, n](const Vec& z) {
    return z.size() == n && z.allFinite() && (z - center).norm() <= radius + 1e-9;
  };
  set.sample = [radius, center, n](Rng& rng) -> Vec {
    return center + rng.in_ball(n, radius);
  };
  return set;
}

// x |-> A f(A^T x + a).  Keeps monotonicity; with f kappa-monotone the result
// is sigma_min(A)^2 * kappa monotone.
inline VectorField affine_substitution(const VectorField& f, const Mat& A, const Vec& a) {
  if (A.cols() != f.dim || a.size() != f.dim)
    throw std::invalid_argument("affine_substitution: dimension mismatch");
  VectorField g;
  g.dim = static_cast<int>(A.rows());
  g.eval = [f, A, a](const Vec& x) -> Vec { return A * f.eval(A.transpose() * x + a); };
  return g;
}

inline VectorField average_field(std::vector<VectorField> fields, std::vector<double> weights) {
  if (fields.empty()) throw std::invalid_argument("average_field: empty field list");
  if (fields.size() != weights.size())
    throw std::invalid_argument("average_field: one weight per field required");
  const int dim = fields.front().dim;
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("average_field: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("average_field: weights must sum to 1");
  for (const auto& f : fields)
    if (f.dim != dim) throw std::invalid_argument("average_field: dimension mismatch");
  VectorField g;
  g.dim = dim;
  g.eval = [fields = std::move(fields), weights = std::move(weights), dim](const Vec& z) -> Vec {
    Vec acc = Vec::Zero(dim);
    for (std::size_t i = 0; i < fields.size(); ++i) acc += weights[i] * fields[i].eval(z);
    return acc;
  };
  return g;
}

struct MonotonicityEstimate {
  double modulus_lower = 0.0;
  int pair_count = 0;
  std::pair<Vec, Vec> worst_pair;
};

// Empirical lower bound on the strong-monotonicity modulus: the minimum of
// <g(z)-g(z'), z-z'> / ||z-z'||^2 over sampled pairs.  Independent uniform
// pairs alone almost never align with the radius in dimension >= 5 and badly
// overestimate the modulus of radially symmetric fields, so the proposal
// mixes three pair families: independent uniform pairs, collinear pairs on a
// shared ray through the center (for balls), and short-range pairs probing
// the local Jacobian.
inline MonotonicityEstimate estimate_modulus(const VectorField& g, const ConvexCompactSet& set,
                                             int num_pairs, std::uint64_t rng_seed) {
  if (num_pairs < 1) throw std::invalid_argument("estimate_modulus: need at least one pair");
  if (set.diameter_bound <= 0.0) throw std::invalid_argument("estimate_modulus: degenerate set");
  if (!set.sample) throw std::invalid_argument("estimate_modulus: set has no sampler");
  Rng rng(rng_seed);
  const int n = set.dim;
  const double local_step = 5e-4 * set.diameter_bound;
  MonotonicityEstimate est;
  est.modulus_lower = std::numeric_limits<double>::infinity();
  for (int i = 0; i < num_pairs; ++i) {
    Vec a, b;
    switch (i % 4) {
      case 2:
        if (set.is_ball) {
          Vec u = rng.on_sphere(n);
          double r1 = set.radius * std::pow(rng.uniform(), 1.0 / n);
          double r2 = set.radius * std::pow(rng.uniform(), 1.0 / n);
          a = set.center + r1 * u;
          b = set.center + r2 * u;
          break;
        }
        [[fallthrough]];
      case 0:
      case 1:
        a = set.sample(rng);
        b = set.sample(rng);
        break;
      default:
        a = set.sample(rng);
        b = set.project(a + local_step * rng.on_sphere(n));
        break;
    }
    double d2 = (a - b).squaredNorm();
    if (d2 < 1e-24) continue;
    double ratio = (g.eval(a) - g.eval(b)).dot(a - b) / d2;
    ++est.pair_count;
    if (ratio < est.modulus_lower) {
      est.modulus_lower = ratio;
      est.worst_pair = {a, b};
    }
  }
  if (est.pair_count == 0) est.modulus_lower = 0.0;
  return est;
}

// Max sampled ||g(z)-g(z')|| / ||z-z'|| inflated by 1.5 as a safety margin.
inline double estimate_lipschitz(const VectorField& g, const ConvexCompactSet& set,
                                 int num_pairs = 200, std::uint64_t rng_seed = 0x11b5c417ULL) {
  if (set.diameter_bound <= 0.0) throw std::invalid_argument("estimate_lipschitz: degenerate set");
  if (!set.sample) throw std::invalid_argument("estimate_lipschitz: set has no sampler");
  Rng rng(rng_seed);
  double best = 0.0;
  for (int i = 0; i < num_pairs; ++i) {
    Vec a = set.sample(rng);
    Vec b = set.sample(rng);
    double d = (a - b).norm();
    if (d < 1e-12) continue;
    best = std::max(best, (g.eval(a) - g.eval(b)).norm() / d);
  }
  return 1.5 * best;
}

struct SolveResult {
  Vec z;
  int iterations = 0;
  bool converged = false;
  double step = 0.0;        // constant step, 0 when the diminishing fallback ran
  bool degenerate = false;  // kappa below floor: diminishing steps c/k engaged
};

// Projected-field iteration z_k = Proj(z_{k-1} - gamma g(z_{k-1})) with the
// constant step gamma = kappa / L^2; linearly convergent for strongly
// monotone Lipschitz fields.  Convergence is declared on the step
// displacement ||z_k - z_{k-1}|| / gamma <= tol, a cheap proxy for the
// natural residual.  kappa below 1e-6 switches to diminishing steps c/k,
// c = 1/L (the field may fail to be strongly monotone, e.g. an empirical
// field built from too few observations).
inline SolveResult solve_strongly_monotone_vi(const VectorField& g, const ConvexCompactSet& set,
                                              double kappa, double lipschitz_hint, double tol = 1e-8,
                                              int max_iters = 200000, const Vec* start = nullptr) {
  if (tol <= 0.0) throw std::invalid_argument("solve_strongly_monotone_vi: tol must be positive");
  if (lipschitz_hint <= 0.0)
    throw std::invalid_argument("solve_strongly_monotone_vi: lipschitz_hint must be positive");
  const double kappa_floor = 1e-6;
  SolveResult res;
  res.degenerate = kappa < kappa_floor;
  const double gamma_const =
      res.degenerate ? 0.0 : kappa / (lipschitz_hint * lipschitz_hint);
  res.step = gamma_const;
  Vec z = start ? set.project(*start) : set.project(Vec::Zero(set.dim));
  for (int k = 1; k <= max_iters; ++k) {
    double gamma = res.degenerate ? 1.0 / (lipschitz_hint * k) : gamma_const;
    Vec z_next = set.project(z - gamma * g.eval(z));
    double disp = (z_next - z).norm();
    z = std::move(z_next);
    res.iterations = k;
    if (disp / gamma <= tol) {
      res.converged = true;
      break;
    }
  }
  res.z = std::move(z);
  return res;
}

struct ResidualReport {
  double weak = 0.0;    // max over probes z of -g(z)^T (z - candidate)
  double strong = 0.0;  // max over probes z of -g(candidate)^T (z - candidate)
};

inline ResidualReport weak_solution_residual(const VectorField& g, const ConvexCompactSet& set,
                                             const Vec& candidate, const std::vector<Vec>& probes) {
  if (!set.contains(candidate))
    throw std::invalid_argument("weak_solution_residual: candidate outside set");
  ResidualReport rep;
  rep.weak = -std::numeric_limits<double>::infinity();
  rep.strong = -std::numeric_limits<double>::infinity();
  Vec g_cand = g.eval(candidate);
  for (const Vec& z : probes) {
    if (!set.contains(z))
      throw std::invalid_argument("weak_solution_residual: probe outside set");
    Vec d = z - candidate;
    rep.weak = std::max(rep.weak, -g.eval(z).dot(d));
    rep.strong = std::max(rep.strong, -g_cand.dot(d));
  }
  if (probes.empty()) rep.weak = rep.strong = 0.0;
  return rep;
}

}  // namespace glmvi
