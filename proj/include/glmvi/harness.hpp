#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "glmvi/glm_model.hpp"
#include "glmvi/links.hpp"
#include "glmvi/sa_estimator.hpp"
#include "glmvi/saa_estimator.hpp"
#include "glmvi/single_obs.hpp"
#include "glmvi/vi_core.hpp"

namespace glmvi {

enum class Scale { Desk, Paper };
enum class KappaMode { Tuned, Analytic };

// Flat experiment configuration; defaults are the desk scale (CI-friendly),
// --scale paper switches to the full grid for manual runs.
struct HarnessConfig {
  std::string experiment = "profiles";
  std::vector<Link> links{Link::Logistic, Link::Linear, Link::Hinge, Link::Ramp};
  int n = 20;
  std::vector<long> K_list{400, 1000, 4000};
  int replications = 10;
  double sigma = 1.0;
  std::vector<double> lambdas{0.1, 1.0};
  std::uint64_t master_seed = 0;
  KappaMode kappa_mode = KappaMode::Tuned;
  Scale scale = Scale::Desk;
  int jobs = 0;  // 0: hardware concurrency
  double tol = 1e-8;
  int training_signals = 1;
  std::string estimator = "sa";  // estimate subcommand: sa | saa | single
};

inline void apply_scale(HarnessConfig& config) {
  if (config.scale == Scale::Paper) {
    config.n = 100;
    config.K_list = {400, 1000, 4000, 10000, 40000};
    config.replications = 10;
  } else {
    config.n = 20;
    config.replications = 10;
    if (config.experiment == "fig3") config.K_list = {400, 1000, 2000};
    else config.K_list = {400, 1000, 4000};
  }
  if (config.experiment == "estimate") config.K_list = {1000};
}

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline long parse_long(const std::string& v, const std::string& key) {
  std::size_t pos = 0;
  long out;
  try {
    out = std::stol(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for '" + key + "': " + v);
  }
  if (pos != v.size()) throw std::invalid_argument("config: bad integer for '" + key + "': " + v);
  return out;
}

inline double parse_double(const std::string& v, const std::string& key) {
  std::size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for '" + key + "': " + v);
  }
  if (pos != v.size()) throw std::invalid_argument("config: bad number for '" + key + "': " + v);
  return out;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.push_back("");
  return parts;
}

}  // namespace detail

// One key=value assignment; shared by config files and CLI overrides.
// Unknown keys are rejected.
inline void apply_config_entry(HarnessConfig& config, const std::string& key,
                               const std::string& value) {
  using detail::parse_double;
  using detail::parse_long;
  if (key == "link") {
    config.links = {parse_link(value)};
  } else if (key == "links") {
    config.links.clear();
    for (const auto& name : detail::split(value, ',')) config.links.push_back(parse_link(detail::trim(name)));
    if (config.links.empty()) throw std::invalid_argument("config: empty links list");
  } else if (key == "n") {
    long n = parse_long(value, key);
    if (n < 1) throw std::invalid_argument("config: n must be positive");
    config.n = static_cast<int>(n);
  } else if (key == "K") {
    config.K_list.clear();
    for (const auto& item : detail::split(value, ',')) {
      long K = parse_long(detail::trim(item), key);
      if (K < 1) throw std::invalid_argument("config: K values must be positive");
      config.K_list.push_back(K);
    }
    if (config.K_list.empty()) throw std::invalid_argument("config: empty K list");
    std::sort(config.K_list.begin(), config.K_list.end());
    config.K_list.erase(std::unique(config.K_list.begin(), config.K_list.end()),
                        config.K_list.end());
  } else if (key == "replications") {
    long r = parse_long(value, key);
    if (r < 1) throw std::invalid_argument("config: replications must be positive");
    config.replications = static_cast<int>(r);
  } else if (key == "sigma") {
    double s = parse_double(value, key);
    if (s < 0.0) throw std::invalid_argument("config: sigma must be nonnegative");
    config.sigma = s;
  } else if (key == "lambda") {
    config.lambdas.clear();
    for (const auto& item : detail::split(value, ',')) {
      double l = parse_double(detail::trim(item), key);
      if (l < 0.0) throw std::invalid_argument("config: lambda must be nonnegative");
      config.lambdas.push_back(l);
    }
    if (config.lambdas.empty()) throw std::invalid_argument("config: empty lambda list");
    std::sort(config.lambdas.begin(), config.lambdas.end());
  } else if (key == "kappa_mode") {
    if (value == "tuned") config.kappa_mode = KappaMode::Tuned;
    else if (value == "analytic") config.kappa_mode = KappaMode::Analytic;
    else throw std::invalid_argument("config: kappa_mode must be tuned or analytic");
  } else if (key == "jobs") {
    long j = parse_long(value, key);
    if (j < 0) throw std::invalid_argument("config: jobs must be nonnegative");
    config.jobs = static_cast<int>(j);
  } else if (key == "tol") {
    double t = parse_double(value, key);
    if (t <= 0.0) throw std::invalid_argument("config: tol must be positive");
    config.tol = t;
  } else if (key == "training_signals") {
    long t = parse_long(value, key);
    if (t < 1) throw std::invalid_argument("config: training_signals must be positive");
    config.training_signals = static_cast<int>(t);
  } else if (key == "estimator") {
    if (value != "sa" && value != "saa" && value != "single")
      throw std::invalid_argument("config: estimator must be sa, saa or single");
    config.estimator = value;
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

// key=value lines, '#' comments, blank lines ignored.
inline void apply_config_file(HarnessConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot read '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not key=value: " + line);
    apply_config_entry(config, detail::trim(line.substr(0, eq)),
                       detail::trim(line.substr(eq + 1)));
  }
}

struct ExperimentRow {
  std::string experiment;
  std::string link;
  long K = 0;
  int replication = 0;
  std::uint64_t seed = 0;
  std::string estimator;
  double error = 0.0;
  double sq_error = 0.0;
  double bound = 0.0;
  double wall_time_s = 0.0;
  // Recorded but not serialized:
  double kappa = std::numeric_limits<double>::quiet_NaN();
  bool solver_converged = true;
};

using ExperimentTable = std::vector<ExperimentRow>;

struct ProfileRow {
  std::string link;
  double t = 0.0, h = 0.0, R = 0.0, modulus = 0.0;
};

inline std::string fmt_float(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_profile_csv(const std::vector<ProfileRow>& rows, std::ostream& out) {
  out << "link,t,h,R,modulus\n";
  for (const auto& r : rows)
    out << r.link << ',' << fmt_float(r.t) << ',' << fmt_float(r.h) << ',' << fmt_float(r.R)
        << ',' << fmt_float(r.modulus) << '\n';
}

inline void write_experiment_csv(const ExperimentTable& rows, std::ostream& out) {
  out << "experiment,link,K,replication,seed,estimator,error,sq_error,bound,wall_time_s\n";
  for (const auto& r : rows)
    out << r.experiment << ',' << r.link << ',' << r.K << ',' << r.replication << ',' << r.seed
        << ',' << r.estimator << ',' << fmt_float(r.error) << ',' << fmt_float(r.sq_error) << ','
        << fmt_float(r.bound) << ',' << fmt_float(r.wall_time_s) << '\n';
}

inline ExperimentTable read_experiment_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: empty input");
  if (detail::trim(line) != "experiment,link,K,replication,seed,estimator,error,sq_error,bound,wall_time_s")
    throw std::invalid_argument("csv: unexpected header: " + line);
  ExperimentTable rows;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    auto parts = detail::split(line, ',');
    if (parts.size() != 10) throw std::invalid_argument("csv: bad row: " + line);
    ExperimentRow r;
    r.experiment = parts[0];
    r.link = parts[1];
    r.K = detail::parse_long(parts[2], "K");
    r.replication = static_cast<int>(detail::parse_long(parts[3], "replication"));
    r.seed = static_cast<std::uint64_t>(std::stoull(parts[4]));
    r.estimator = parts[5];
    r.error = detail::parse_double(parts[6], "error");
    r.sq_error = detail::parse_double(parts[7], "sq_error");
    r.bound = detail::parse_double(parts[8], "bound");
    r.wall_time_s = detail::parse_double(parts[9], "wall_time_s");
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void sort_experiment_table(ExperimentTable& rows) {
  std::sort(rows.begin(), rows.end(), [](const ExperimentRow& a, const ExperimentRow& b) {
    return std::tie(a.experiment, a.link, a.K, a.replication, a.estimator) <
           std::tie(b.experiment, b.link, b.K, b.replication, b.estimator);
  });
}

namespace detail {

template <class Task>
void parallel_for(int num_tasks, int jobs, Task&& task) {
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min(jobs, num_tasks));
  if (jobs == 1) {
    for (int i = 0; i < num_tasks; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i; (i = next.fetch_add(1)) < num_tasks;) task(i);
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Stream-purpose tags for seed derivation.
constexpr std::uint64_t kTagFig2 = 2, kTagFig3 = 3, kTagEstimate = 5, kTagMomentBound = 10;

inline GlmModel experiment_model(Link link, int n, double sigma) {
  return link == Link::Logistic ? make_glm_model(n, link, LabelLaw::Bernoulli)
                                : make_glm_model(n, link, LabelLaw::Gaussian, sigma);
}

}  // namespace detail

// Radial profile and modulus tables behind the h / modulus curves: 60 grid
// points on (0, 3] per link, shared t and R grids.
inline std::vector<ProfileRow> run_profiles(const HarnessConfig& config) {
  std::vector<ProfileRow> rows;
  const int points = 60;
  for (Link link : config.links) {
    for (int i = 1; i <= points; ++i) {
      double t = 3.0 * i / points;
      ProfileRow row;
      row.link = link_name(link);
      row.t = t;
      row.h = h_profile(link, t);
      row.R = t;
      row.modulus = modulus_profile(link, t);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// Replicated two-estimator comparison: per (link, K, replication) draw a
// signal on the unit sphere and K observations, tune kappa on regenerated
// labels, then run the stochastic recurrence and the empirical-field solve on
// the same observations.
inline ExperimentTable run_fig2(const HarnessConfig& config) {
  const ConvexCompactSet set = ball_set(config.n);
  const int L = static_cast<int>(config.links.size());
  const int nK = static_cast<int>(config.K_list.size());
  std::vector<double> hint(L), M_cons(L);
  std::vector<GlmModel> models;
  for (int li = 0; li < L; ++li) {
    hint[li] = modulus_profile(config.links[li], 1.0);
    models.push_back(detail::experiment_model(config.links[li], config.n, config.sigma));
    Rng rng = Rng::stream(config.master_seed, detail::kTagMomentBound, li);
    M_cons[li] = estimate_M(models[li], set, 8, 20000, rng).conservative();
  }
  const int num_tasks = L * nK * config.replications;
  ExperimentTable rows(2 * num_tasks);
  detail::parallel_for(num_tasks, config.jobs, [&](int i) {
    const int li = i / (nK * config.replications);
    const int ki = (i / config.replications) % nK;
    const int rep = i % config.replications;
    const Link link = config.links[li];
    const long K = config.K_list[ki];
    const std::uint64_t seed = derive_seed(config.master_seed, detail::kTagFig2, li, K, rep);
    Rng rng(seed);
    const GlmModel& model = models[li];
    Vec x = draw_signal_on_sphere(config.n, rng);
    std::vector<Observation> obs;
    obs.reserve(K);
    for (long k = 0; k < K; ++k) obs.push_back(sample_observation(model, x, rng));
    double kappa = config.kappa_mode == KappaMode::Tuned
                       ? tune_kappa(model, obs, default_kappa_grid(hint[li]), set, rng,
                                    config.training_signals)
                       : hint[li];

    ExperimentRow sa_row;
    sa_row.experiment = "fig2";
    sa_row.link = link_name(link);
    sa_row.K = K;
    sa_row.replication = rep;
    sa_row.seed = seed;
    sa_row.estimator = "SA";
    sa_row.kappa = kappa;
    auto t0 = std::chrono::steady_clock::now();
    SaConfig sa_config;
    sa_config.kappa = kappa;
    sa_config.K = static_cast<int>(K);
    SaRun sa = run_sa(model, obs, sa_config, set);
    sa_row.wall_time_s = detail::seconds_since(t0);
    sa_row.error = (sa.estimate - x).norm();
    sa_row.sq_error = sa_row.error * sa_row.error;
    sa_row.bound = error_bound(M_cons[li], kappa, K);

    ExperimentRow saa_row = sa_row;
    saa_row.estimator = "SAA";
    t0 = std::chrono::steady_clock::now();
    SaaResult saa = solve_saa(obs, link, set, 0.0, config.tol);
    saa_row.wall_time_s = detail::seconds_since(t0);
    saa_row.error = (saa.estimate - x).norm();
    saa_row.sq_error = saa_row.error * saa_row.error;
    saa_row.bound = 0.0;  // no finite-sample bound is computed for this estimator
    saa_row.kappa = saa.kappa_emp;
    saa_row.solver_converged = saa.converged;

    rows[2 * i] = std::move(sa_row);
    rows[2 * i + 1] = std::move(saa_row);
  });
  sort_experiment_table(rows);
  return rows;
}

// Fixed-design sweep over (lambda, K): Gaussian ensemble, arctan link,
// per-realization certified error bound in the bound column.
inline ExperimentTable run_fig3(const HarnessConfig& config) {
  const ConvexCompactSet set = ball_set(config.n);
  const int nL = static_cast<int>(config.lambdas.size());
  const int nK = static_cast<int>(config.K_list.size());
  const int num_tasks = nL * nK * config.replications;
  ExperimentTable rows(num_tasks);
  detail::parallel_for(num_tasks, config.jobs, [&](int i) {
    const int lam_i = i / (nK * config.replications);
    const int ki = (i / config.replications) % nK;
    const int rep = i % config.replications;
    const double lambda = config.lambdas[lam_i];
    const long K = config.K_list[ki];
    const std::uint64_t seed = derive_seed(config.master_seed, detail::kTagFig3, lam_i, K, rep);
    Rng rng(seed);
    SingleObsModel model;
    model.eta = gaussian_ensemble(config.n, static_cast<int>(K), rng);
    model.phi = Link::Arctan;
    model.lambda = lambda;
    Vec x = draw_signal_on_sphere(config.n, rng);
    Vec y = observe(model, x, rng);
    auto t0 = std::chrono::steady_clock::now();
    SingleObsResult res = solve_single_obs(model, y, set, config.tol);
    double wall = detail::seconds_since(t0);
    attach_truth_diagnostics(res, model, x, y);
    ExperimentRow row;
    row.experiment = "fig3_lambda" + fmt_float(lambda);
    row.link = link_name(model.phi);
    row.K = K;
    row.replication = rep;
    row.seed = seed;
    row.estimator = "SAA";
    row.error = (res.estimate - x).norm();
    row.sq_error = row.error * row.error;
    row.bound = res.bound;
    row.wall_time_s = wall;
    row.kappa = res.kappa_est;
    row.solver_converged = res.converged;
    rows[i] = std::move(row);
  });
  sort_experiment_table(rows);
  return rows;
}

// Least-squares slope of log(mean error) versus log(K).
inline double fit_rate(const ExperimentTable& table, const std::string& estimator,
                       const std::string& link) {
  std::vector<std::pair<long, std::pair<double, int>>> acc;  // K -> (sum error, count)
  for (const auto& row : table) {
    if (row.estimator != estimator || row.link != link) continue;
    auto it = std::find_if(acc.begin(), acc.end(),
                           [&](const auto& e) { return e.first == row.K; });
    if (it == acc.end()) acc.push_back({row.K, {row.error, 1}});
    else {
      it->second.first += row.error;
      it->second.second += 1;
    }
  }
  if (acc.size() < 3)
    throw std::invalid_argument("fit_rate: need at least 3 distinct K values");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [K, sum_count] : acc) {
    double lx = std::log(static_cast<double>(K));
    double ly = std::log(std::max(sum_count.first / sum_count.second, 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double m = static_cast<double>(acc.size());
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

struct RateRow {
  std::string estimator;
  std::string link;
  double slope = 0.0;
};

inline std::vector<RateRow> fit_all_rates(const ExperimentTable& table) {
  std::vector<RateRow> out;
  std::vector<std::pair<std::string, std::string>> seen;
  for (const auto& row : table) {
    std::pair<std::string, std::string> key{row.estimator, row.link};
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);
    out.push_back({key.first, key.second, fit_rate(table, key.first, key.second)});
  }
  std::sort(out.begin(), out.end(), [](const RateRow& a, const RateRow& b) {
    return std::tie(a.estimator, a.link) < std::tie(b.estimator, b.link);
  });
  return out;
}

inline void write_rate_csv(const std::vector<RateRow>& rows, std::ostream& out) {
  out << "estimator,link,slope\n";
  for (const auto& r : rows) out << r.estimator << ',' << r.link << ',' << fmt_float(r.slope) << '\n';
}

struct EstimateOutcome {
  ExperimentRow row;
  bool converged = true;
  std::string summary;
};

// Single synthetic estimation run for the estimate subcommand.
inline EstimateOutcome run_estimate(const HarnessConfig& config) {
  const Link link = config.links.front();
  const long K = config.K_list.front();
  const std::uint64_t seed = derive_seed(config.master_seed, detail::kTagEstimate, 0);
  Rng rng(seed);
  const ConvexCompactSet set = ball_set(config.n);
  EstimateOutcome out;
  ExperimentRow& row = out.row;
  row.experiment = "estimate";
  row.link = link_name(link);
  row.K = K;
  row.replication = 0;
  row.seed = seed;
  auto t0 = std::chrono::steady_clock::now();
  if (config.estimator == "single") {
    SingleObsModel model;
    model.eta = gaussian_ensemble(config.n, static_cast<int>(K), rng);
    model.phi = link;
    model.lambda = config.lambdas.front();
    Vec x = draw_signal_on_sphere(config.n, rng);
    Vec y = observe(model, x, rng);
    SingleObsResult res = solve_single_obs(model, y, set, config.tol);
    attach_truth_diagnostics(res, model, x, y);
    row.estimator = "SAA";
    row.error = (res.estimate - x).norm();
    row.bound = res.bound;
    row.kappa = res.kappa_est;
    out.converged = res.converged;
  } else {
    GlmModel model = detail::experiment_model(link, config.n, config.sigma);
    Vec x = draw_signal_on_sphere(config.n, rng);
    std::vector<Observation> obs;
    obs.reserve(K);
    for (long k = 0; k < K; ++k) obs.push_back(sample_observation(model, x, rng));
    double hint = modulus_profile(link, 1.0);
    double kappa = config.kappa_mode == KappaMode::Tuned
                       ? tune_kappa(model, obs, default_kappa_grid(hint), set, rng,
                                    config.training_signals)
                       : hint;
    if (config.estimator == "sa") {
      SaConfig sa_config;
      sa_config.kappa = kappa;
      sa_config.K = static_cast<int>(K);
      SaRun run = run_sa(model, obs, sa_config, set);
      row.estimator = "SA";
      row.error = (run.estimate - x).norm();
      Rng m_rng = Rng::stream(config.master_seed, detail::kTagMomentBound, 0);
      row.bound = error_bound(estimate_M(model, set, 4, 5000, m_rng).conservative(), kappa, K);
      row.kappa = kappa;
    } else {
      SaaResult res = solve_saa(obs, link, set, 0.0, config.tol);
      row.estimator = "SAA";
      row.error = (res.estimate - x).norm();
      row.bound = 0.0;
      row.kappa = res.kappa_emp;
      out.converged = res.converged;
    }
  }
  row.wall_time_s = detail::seconds_since(t0);
  row.sq_error = row.error * row.error;
  row.solver_converged = out.converged;
  std::ostringstream summary;
  summary << "estimator=" << row.estimator << " link=" << row.link << " n=" << config.n
          << " K=" << K << " error=" << fmt_float(row.error) << " kappa=" << fmt_float(row.kappa)
          << " bound=" << fmt_float(row.bound) << " converged=" << (out.converged ? "yes" : "no");
  out.summary = summary.str();
  return out;
}

}  // namespace glmvi
