#pragma once

#include <cmath>
#include <stdexcept>

#include "glmvi/links.hpp"
#include "glmvi/rng.hpp"
#include "glmvi/vi_core.hpp"

namespace glmvi {

enum class LabelLaw { Bernoulli, Gaussian };

// Observation model: regressor eta with i.i.d. N(0,1) entries, label with
// conditional mean f(eta^T x).  Labels are Bernoulli (link range must lie in
// [0,1]) or Gaussian with standard deviation sigma per coordinate.
struct GlmModel {
  int n = 0;
  int m = 1;
  Link link = Link::Logistic;
  LabelLaw label_law = LabelLaw::Gaussian;
  double sigma = 1.0;
};

inline GlmModel make_glm_model(int n, Link link, LabelLaw law, double sigma = 1.0, int m = 1) {
  if (n < 1 || m < 1) throw std::invalid_argument("make_glm_model: dimensions must be positive");
  if (sigma < 0.0) throw std::invalid_argument("make_glm_model: sigma must be nonnegative");
  if (law == LabelLaw::Bernoulli && link != Link::Logistic && link != Link::Ramp)
    throw std::invalid_argument(
        "make_glm_model: Bernoulli labels need a link with range in [0,1]");
  return GlmModel{n, m, link, law, sigma};
}

struct Observation {
  Mat eta;  // n x m
  Vec y;    // m
};

inline Vec draw_signal_on_sphere(int n, Rng& rng) { return rng.on_sphere(n); }

inline Observation sample_observation(const GlmModel& model, const Vec& x, Rng& rng) {
  if (x.size() != model.n) throw std::invalid_argument("sample_observation: signal dimension mismatch");
  if (!x.allFinite()) throw std::invalid_argument("sample_observation: non-finite signal");
  Observation obs;
  obs.eta = rng.normal_matrix(model.n, model.m);
  Vec mean = obs.eta.transpose() * x;
  for (Eigen::Index j = 0; j < mean.size(); ++j) mean[j] = eval_link(model.link, mean[j]);
  obs.y.resize(model.m);
  if (model.label_law == LabelLaw::Bernoulli) {
    for (int j = 0; j < model.m; ++j) obs.y[j] = rng.bernoulli(mean[j]) ? 1.0 : 0.0;
  } else {
    for (int j = 0; j < model.m; ++j) obs.y[j] = mean[j] + model.sigma * rng.normal();
  }
  return obs;
}

// G_(eta,y)(z) = eta f(eta^T z) - eta y, the observable unbiased sample of
// F(z) - F(x).
inline Vec stochastic_field_sample(const GlmModel& model, const Observation& obs, const Vec& z) {
  if (z.size() != model.n)
    throw std::invalid_argument("stochastic_field_sample: dimension mismatch");
  Vec u = obs.eta.transpose() * z;
  for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = eval_link(model.link, u[j]) - obs.y[j];
  return obs.eta * u;
}

struct SecondMomentEstimate {
  double mean = 0.0;  // Monte Carlo estimate of E ||eta y||^2
  double se = 0.0;    // its standard error
};

inline SecondMomentEstimate estimate_second_moment(const GlmModel& model, const Vec& x,
                                                   int num_samples, Rng& rng) {
  if (num_samples < 1) throw std::invalid_argument("estimate_second_moment: need samples");
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < num_samples; ++s) {
    Observation obs = sample_observation(model, x, rng);
    double v = (obs.eta * obs.y).squaredNorm();
    sum += v;
    sum_sq += v * v;
  }
  SecondMomentEstimate est;
  est.mean = sum / num_samples;
  double var = std::max(0.0, sum_sq / num_samples - est.mean * est.mean);
  est.se = std::sqrt(var / num_samples);
  return est;
}

// Bound M with E ||eta y||^2 <= M^2 over the signal set.  Signals are drawn
// on the bounding sphere, the worst case for a ball since the moment grows
// with ||x|| for the implemented laws.  value() inflates by 1.2 to guard
// against Monte Carlo underestimation; conservative() adds two standard
// errors instead.
struct MomentBound {
  double mean_sq = 0.0;  // max over sampled signals of the per-signal mean
  double se_sq = 0.0;    // standard error at the maximizing signal

  double value() const { return 1.2 * std::sqrt(mean_sq); }
  double conservative() const { return std::sqrt(mean_sq + 2.0 * se_sq); }
};

inline MomentBound estimate_M(const GlmModel& model, const ConvexCompactSet& signal_set,
                              int num_signals, int samples_per_signal, Rng& rng) {
  if (num_signals < 1 || samples_per_signal < 1)
    throw std::invalid_argument("estimate_M: counts must be positive");
  double radius = signal_set.is_ball ? signal_set.radius : 1.0;
  Vec center = signal_set.is_ball ? signal_set.center : Vec::Zero(model.n);
  MomentBound bound;
  for (int s = 0; s < num_signals; ++s) {
    Vec x = center + radius * rng.on_sphere(model.n);
    SecondMomentEstimate est = estimate_second_moment(model, x, samples_per_signal, rng);
    if (est.mean >= bound.mean_sq) {
      bound.mean_sq = est.mean;
      bound.se_sq = est.se;
    }
  }
  return bound;
}

// Monte Carlo estimate of F(z) = E_eta { eta f(eta^T z) }.
inline Vec expected_field(const GlmModel& model, const Vec& z, int num_samples, Rng& rng) {
  if (num_samples < 1) throw std::invalid_argument("expected_field: need samples");
  Vec acc = Vec::Zero(model.n);
  for (int s = 0; s < num_samples; ++s) {
    Mat eta = rng.normal_matrix(model.n, model.m);
    Vec u = eta.transpose() * z;
    for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = eval_link(model.link, u[j]);
    acc += eta * u;
  }
  return acc / num_samples;
}

}  // namespace glmvi
