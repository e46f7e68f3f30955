#include "CLI11.hpp"

#include <cctype>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "glmvi/harness.hpp"

namespace {

struct KeyFlag {
  const char* key;
  std::string value;
  CLI::Option* opt = nullptr;
};

struct SubOpts {
  std::string seed_str;
  std::string out;
  std::string config_path;
  std::string scale = "desk";
  std::string in_path;
  std::vector<KeyFlag> keys;
};

void add_common(CLI::App* cmd, SubOpts& opts, std::initializer_list<const char*> keys) {
  cmd->add_option("--seed", opts.seed_str, "master seed (decimal, required)")->required();
  cmd->add_option("--out", opts.out, "output CSV path (default: stdout)");
  cmd->add_option("--config", opts.config_path, "key=value config file; flags override it");
  cmd->add_option("--scale", opts.scale, "desk or paper grid")
      ->check(CLI::IsMember({"desk", "paper"}));
  for (const char* k : keys) opts.keys.push_back({k, "", nullptr});
  for (auto& kf : opts.keys)
    kf.opt = cmd->add_option(std::string("--") + kf.key, kf.value, "config override");
}

glmvi::HarnessConfig build_config(const std::string& experiment, const SubOpts& opts) {
  glmvi::HarnessConfig config;
  config.experiment = experiment;
  config.scale = opts.scale == "paper" ? glmvi::Scale::Paper : glmvi::Scale::Desk;
  glmvi::apply_scale(config);
  if (!opts.config_path.empty()) glmvi::apply_config_file(config, opts.config_path);
  for (const auto& kf : opts.keys)
    if (kf.opt->count() > 0) glmvi::apply_config_entry(config, kf.key, kf.value);
  if (opts.seed_str.empty() ||
      !std::all_of(opts.seed_str.begin(), opts.seed_str.end(),
                   [](unsigned char c) { return std::isdigit(c); }))
    throw std::invalid_argument("config: --seed must be a decimal integer");
  config.master_seed = std::stoull(opts.seed_str);
  return config;
}

int write_output(const std::string& path, const std::function<void(std::ostream&)>& writer) {
  if (path.empty()) {
    writer(std::cout);
    return 0;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot open '" << path << "' for writing\n";
    return 1;
  }
  writer(out);
  out.flush();
  if (!out) {
    std::cerr << "error: failed while writing '" << path << "'\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GLM signal recovery by solving strongly monotone variational inequalities"};
  app.require_subcommand(1);

  SubOpts profiles_opts, fig2_opts, fig3_opts, rate_opts, estimate_opts;
  auto* profiles = app.add_subcommand("profiles", "radial profile h and modulus tables");
  add_common(profiles, profiles_opts, {"link", "links"});
  auto* fig2 = app.add_subcommand("fig2", "replicated SA vs SAA comparison over (link, K)");
  add_common(fig2, fig2_opts,
             {"link", "links", "n", "K", "replications", "sigma", "kappa_mode", "jobs", "tol",
              "training_signals"});
  auto* fig3 = app.add_subcommand("fig3", "fixed-design arctan sweep over (lambda, K)");
  add_common(fig3, fig3_opts, {"n", "K", "replications", "lambda", "jobs", "tol"});
  auto* rate = app.add_subcommand("rate", "slope of log mean error vs log K");
  add_common(rate, rate_opts,
             {"link", "links", "n", "K", "replications", "sigma", "kappa_mode", "jobs", "tol",
              "training_signals"});
  rate->add_option("--in", rate_opts.in_path, "fit an existing experiment CSV instead of rerunning");
  auto* estimate = app.add_subcommand("estimate", "one synthetic estimation run");
  add_common(estimate, estimate_opts,
             {"link", "estimator", "n", "K", "replications", "sigma", "lambda", "kappa_mode",
              "jobs", "tol", "training_signals"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(profiles)) {
      auto config = build_config("profiles", profiles_opts);
      auto rows = glmvi::run_profiles(config);
      return write_output(profiles_opts.out,
                          [&](std::ostream& os) { glmvi::write_profile_csv(rows, os); });
    }
    if (app.got_subcommand(fig2)) {
      auto config = build_config("fig2", fig2_opts);
      auto table = glmvi::run_fig2(config);
      return write_output(fig2_opts.out,
                          [&](std::ostream& os) { glmvi::write_experiment_csv(table, os); });
    }
    if (app.got_subcommand(fig3)) {
      auto config = build_config("fig3", fig3_opts);
      auto table = glmvi::run_fig3(config);
      return write_output(fig3_opts.out,
                          [&](std::ostream& os) { glmvi::write_experiment_csv(table, os); });
    }
    if (app.got_subcommand(rate)) {
      auto config = build_config("rate", rate_opts);
      glmvi::ExperimentTable table;
      if (rate_opts.in_path.empty()) {
        table = glmvi::run_fig2(config);
      } else {
        std::ifstream in(rate_opts.in_path);
        if (!in) throw std::invalid_argument("rate: cannot read '" + rate_opts.in_path + "'");
        table = glmvi::read_experiment_csv(in);
      }
      auto rates = glmvi::fit_all_rates(table);
      return write_output(rate_opts.out,
                          [&](std::ostream& os) { glmvi::write_rate_csv(rates, os); });
    }
    if (app.got_subcommand(estimate)) {
      auto config = build_config("estimate", estimate_opts);
      auto outcome = glmvi::run_estimate(config);
      std::cout << outcome.summary << '\n';
      if (!estimate_opts.out.empty()) {
        glmvi::ExperimentTable table{outcome.row};
        int code = write_output(estimate_opts.out,
                                [&](std::ostream& os) { glmvi::write_experiment_csv(table, os); });
        if (code != 0) return code;
      }
      return outcome.converged ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
