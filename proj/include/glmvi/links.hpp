#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include "glmvi/quadrature.hpp"
#include "glmvi/vi_core.hpp"

namespace glmvi {

enum class Link { Logistic, Linear, Hinge, Ramp, Arctan };

inline double eval_link(Link kind, double s) {
  if (!std::isfinite(s)) throw std::invalid_argument("eval_link: non-finite argument");
  switch (kind) {
    case Link::Logistic:
      // overflow-safe branch on the sign
      if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
      else {
        double e = std::exp(s);
        return e / (1.0 + e);
      }
    case Link::Linear: return s;
    case Link::Hinge: return std::max(s, 0.0);
    case Link::Ramp: return std::min(1.0, std::max(s, 0.0));
    case Link::Arctan: return std::atan(s);
  }
  throw std::logic_error("eval_link: unknown link");
}

// Smallest derivative of the link over [-umax, umax]; the kinked links attain
// slope 0 once the window leaves their linear piece.
inline double link_slope_min(Link kind, double umax) {
  if (umax < 0.0) throw std::invalid_argument("link_slope_min: negative window");
  switch (kind) {
    case Link::Logistic: {
      double p = eval_link(Link::Logistic, umax);
      return p * (1.0 - p);
    }
    case Link::Linear: return 1.0;
    case Link::Hinge: return umax > 0.0 ? 0.0 : 1.0;
    case Link::Ramp: return umax > 0.0 ? 0.0 : 1.0;
    case Link::Arctan: return 1.0 / (1.0 + umax * umax);
  }
  throw std::logic_error("link_slope_min: unknown link");
}

inline const char* link_name(Link kind) {
  switch (kind) {
    case Link::Logistic: return "logistic";
    case Link::Linear: return "linear";
    case Link::Hinge: return "hinge";
    case Link::Ramp: return "ramp";
    case Link::Arctan: return "arctan";
  }
  throw std::logic_error("link_name: unknown link");
}

inline Link parse_link(std::string_view name) {
  if (name == "logistic") return Link::Logistic;
  if (name == "linear") return Link::Linear;
  if (name == "hinge") return Link::Hinge;
  if (name == "ramp") return Link::Ramp;
  if (name == "arctan") return Link::Arctan;
  throw std::invalid_argument("parse_link: unknown link '" + std::string(name) + "'");
}

inline VectorField diagonal_field(Link kind, int m) {
  if (m < 1) throw std::invalid_argument("diagonal_field: dimension must be positive");
  VectorField f;
  f.dim = m;
  f.eval = [kind](const Vec& u) -> Vec {
    Vec out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = eval_link(kind, u[i]);
    return out;
  };
  return f;
}

inline double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::sqrt(2.0)); }

// Radial profile h(t) = E_{zeta ~ N(0,1)} { zeta f(t zeta) }.  The linear,
// hinge and ramp cases reduce to closed forms (E{zeta^2} = 1; the hinge
// integrand is even times an indicator; Stein integration for the ramp),
// which sidesteps the slow Gauss-Hermite convergence at their kinks.  The
// smooth links use adaptive Gauss-Hermite quadrature.
inline double h_profile(Link kind, double t) {
  if (t < 0.0) throw std::invalid_argument("h_profile: negative argument");
  if (t == 0.0) return 0.0;
  switch (kind) {
    case Link::Linear: return t;
    case Link::Hinge: return 0.5 * t;
    case Link::Ramp: return t * (normal_cdf(1.0 / t) - 0.5);
    case Link::Logistic:
    case Link::Arctan:
      return expect_std_normal_adaptive(
          [kind, t](double z) { return z * eval_link(kind, t * z); }, 1e-9);
  }
  throw std::logic_error("h_profile: unknown link");
}

// Central finite difference of h; the step is capped at r/2 so the left
// evaluation point stays positive for small r.
inline double h_derivative(Link kind, double r) {
  double step = std::min(1e-4 * std::max(1.0, r), 0.5 * r);
  return (h_profile(kind, r + step) - h_profile(kind, r - step)) / (2.0 * step);
}

// Modulus of strong monotonicity of the radial field F(z) = h(||z||) z/||z||
// on the ball of radius R.  The Jacobian of a radial field has eigenvalues
// h'(r) (radial direction) and h(r)/r (tangential), so the modulus is the
// infimum of their minimum over the radius range; taken over a log grid since
// h' of the sigmoid links varies fastest near 0.
inline double modulus_profile(Link kind, double R, int grid_size = 128) {
  if (R <= 0.0) throw std::invalid_argument("modulus_profile: R must be positive");
  if (grid_size < 16) throw std::invalid_argument("modulus_profile: grid too coarse");
  const double r_lo = 1e-3 * R;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_size; ++i) {
    double r = r_lo * std::pow(R / r_lo, static_cast<double>(i) / (grid_size - 1));
    best = std::min(best, std::min(h_derivative(kind, r), h_profile(kind, r) / r));
  }
  return best;
}

// F(z) = h(||z||) z / ||z||, the population field under standard normal
// regressors; F(0) = 0 by continuity.
inline VectorField radial_field(Link kind, int n) {
  if (n < 1) throw std::invalid_argument("radial_field: dimension must be positive");
  VectorField f;
  f.dim = n;
  f.eval = [kind](const Vec& z) -> Vec {
    double r = z.norm();
    if (r < 1e-14) return Vec::Zero(z.size());
    return (h_profile(kind, r) / r) * z;
  };
  return f;
}

}  // namespace glmvi
