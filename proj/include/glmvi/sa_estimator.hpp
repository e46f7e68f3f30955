#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "glmvi/glm_model.hpp"
#include "glmvi/vi_core.hpp"

namespace glmvi {

struct SaConfig {
  double kappa = 1.0;
  Vec z0;  // empty: center of the feasible set (projection of the origin)
  int K = 0;
  bool record_trajectory = false;
};

struct SaRun {
  Vec estimate;
  std::vector<Vec> trajectory;  // [z0, z1, ..., zK] when recorded
  int steps_taken = 0;
  std::uint64_t seed = 0;
};

inline Vec sa_step(const Vec& z_prev, double gamma, const Vec& g_sample,
                   const ConvexCompactSet& set) {
  if (!set.contains(z_prev)) throw std::invalid_argument("sa_step: iterate outside feasible set");
  if (gamma <= 0.0) throw std::invalid_argument("sa_step: step must be positive");
  return set.project(z_prev - gamma * g_sample);
}

namespace detail {

// Shared recurrence: z_k = Proj(z_{k-1} - gamma_k G_k(z_{k-1})) with
// gamma_k = 1/(kappa (k+1)).
template <class SampleField>
SaRun run_sa_impl(const SaConfig& config, const ConvexCompactSet& set, SampleField&& sample) {
  if (config.kappa <= 0.0) throw std::invalid_argument("run_sa: kappa must be positive");
  Vec z = config.z0.size() ? config.z0 : set.project(Vec::Zero(set.dim));
  if (!set.contains(z)) throw std::invalid_argument("run_sa: z0 outside feasible set");
  SaRun run;
  if (config.record_trajectory) run.trajectory.push_back(z);
  for (int k = 1; k <= config.K; ++k) {
    double gamma = 1.0 / (config.kappa * (k + 1));
    z = sa_step(z, gamma, sample(k, z), set);
    ++run.steps_taken;
    if (config.record_trajectory) run.trajectory.push_back(z);
  }
  run.estimate = std::move(z);
  return run;
}

}  // namespace detail

// Synthetic mode: observations are sampled on the fly from the model at the
// true signal.
inline SaRun run_sa(const GlmModel& model, const Vec& x_true, const SaConfig& config,
                    const ConvexCompactSet& set, Rng& rng) {
  return detail::run_sa_impl(config, set, [&](int, const Vec& z) {
    return stochastic_field_sample(model, sample_observation(model, x_true, rng), z);
  });
}

// Data mode: consumes a pre-drawn observation sequence in order (needed by
// the tuning protocol, which reuses real regressors with regenerated labels).
inline SaRun run_sa(const GlmModel& model, const std::vector<Observation>& observations,
                    const SaConfig& config, const ConvexCompactSet& set) {
  if (static_cast<std::size_t>(config.K) > observations.size())
    throw std::invalid_argument("run_sa: fewer observations than steps");
  return detail::run_sa_impl(config, set, [&](int k, const Vec& z) {
    return stochastic_field_sample(model, observations[k - 1], z);
  });
}

// Finite-time risk bound 4 M^2 / (kappa^2 (k+1)) for the estimate after k steps.
inline double error_bound(double M, double kappa, long k) {
  if (M <= 0.0 || kappa <= 0.0 || k < 0) throw std::invalid_argument("error_bound: bad arguments");
  return 4.0 * M * M / (kappa * kappa * (k + 1));
}

inline std::vector<double> default_kappa_grid(double kappa_hint, int points = 9) {
  if (kappa_hint <= 0.0 || points < 1)
    throw std::invalid_argument("default_kappa_grid: bad arguments");
  std::vector<double> grid(points);
  double lo = kappa_hint / 8.0, hi = 8.0 * kappa_hint;
  for (int i = 0; i < points; ++i)
    grid[i] = points == 1 ? kappa_hint
                          : lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
  return grid;
}

// Tuning protocol: draw a training signal x' on the unit sphere, regenerate
// the labels from the real regressors as if x' were the actual signal, run
// the recurrence for every grid kappa on those labels and keep the kappa with
// the best recovery of x'.  Ties break toward the smaller kappa.
// training_signals > 1 averages the recovery error over several x'.
inline double tune_kappa(const GlmModel& model, const std::vector<Observation>& observations,
                         std::vector<double> kappa_grid, const ConvexCompactSet& set, Rng& rng,
                         int training_signals = 1) {
  if (kappa_grid.empty()) throw std::invalid_argument("tune_kappa: empty grid");
  if (observations.empty()) throw std::invalid_argument("tune_kappa: no observations");
  if (training_signals < 1) throw std::invalid_argument("tune_kappa: need a training signal");
  std::sort(kappa_grid.begin(), kappa_grid.end());
  std::vector<double> score(kappa_grid.size(), 0.0);
  const int K = static_cast<int>(observations.size());
  for (int t = 0; t < training_signals; ++t) {
    Vec x_train = draw_signal_on_sphere(model.n, rng);
    std::vector<Observation> train = observations;
    for (auto& obs : train) {
      Vec mean = obs.eta.transpose() * x_train;
      for (Eigen::Index j = 0; j < mean.size(); ++j) mean[j] = eval_link(model.link, mean[j]);
      if (model.label_law == LabelLaw::Bernoulli) {
        for (int j = 0; j < model.m; ++j) obs.y[j] = rng.bernoulli(mean[j]) ? 1.0 : 0.0;
      } else {
        for (int j = 0; j < model.m; ++j) obs.y[j] = mean[j] + model.sigma * rng.normal();
      }
    }
    for (std::size_t i = 0; i < kappa_grid.size(); ++i) {
      SaConfig config;
      config.kappa = kappa_grid[i];
      config.K = K;
      SaRun run = run_sa(model, train, config, set);
      score[i] += (run.estimate - x_train).norm();
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < score.size(); ++i)
    if (score[i] < score[best]) best = i;  // strict: ties keep the smaller kappa
  return kappa_grid[best];
}

}  // namespace glmvi
