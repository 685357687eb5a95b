#include "deq/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "deq/io.hpp"
#include "deq/models.hpp"

namespace deq {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string join(const RunOptions& opts, const std::string& name) {
  return (fs::path(opts.out_dir) / name).string();
}

void ensure_out_dir(const RunOptions& opts) {
  std::error_code ec;
  fs::create_directories(opts.out_dir, ec);
  if (ec) throw config_error("cannot create output directory '" + opts.out_dir + "'");
}

double elapsed_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

FilterConfig filter_config(const ExperimentConfig& c, const RunOptions& opts) {
  FilterConfig fc;
  fc.particles = c.particles;
  fc.lag = c.lag;
  fc.resampling = c.resampling;
  fc.seed = c.seed;
  fc.threads = opts.threads;
  return fc;
}

// Observations either come from the configured CSV or are regenerated from
// theta_true with a seed-derived noise stream, so every preset is
// self-contained.
ObservationSet load_or_generate(const ExperimentConfig& c, const SolverGrid& grid,
                                const ObservationOperator& op,
                                const OdeSystem& sys) {
  if (c.observations_file) {
    return read_observations_csv(*c.observations_file);
  }
  if (!c.theta_true) {
    throw config_error("no observations_file and no theta_true to simulate from");
  }
  Xoshiro256 rng = make_substream(c.seed, StreamTag::observation_noise);
  return generate_observations(c.x0, *c.theta_true, op, grid, sys,
                               c.h * c.h_ref_factor, rng);
}

void write_exact_errors_csv(const std::vector<StateVector>& errors,
                            const std::vector<double>& times,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << "t";
  const int d = errors.empty() ? 0 : static_cast<int>(errors[0].size());
  for (int c = 1; c <= d; ++c) out << ",r" << c;
  out << "\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    out << format_number(times[i]);
    for (Eigen::Index c = 0; c < errors[i].size(); ++c) {
      out << "," << format_number(errors[i][c]);
    }
    out << "\n";
  }
}

void write_rate_report_csv(const RateCheckReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << "h,mean_sq_sigma,stderr,slope,expected_slope,degenerate_zero\n";
  for (const auto& e : report.entries) {
    out << format_number(e.h) << "," << format_number(e.mean_sq_sigma) << ","
        << format_number(e.stderr_sq) << ","
        << (report.degenerate_zero ? "degenerate" : format_number(report.slope))
        << "," << format_number(report.expected_slope) << ","
        << (report.degenerate_zero ? 1 : 0) << "\n";
  }
}

void finish(RunReport& report, const ExperimentConfig& config,
            const RunOptions& opts, Clock::time_point start) {
  save_config(config, join(opts, "config_echo.json"));
  report.files.push_back("config_echo.json");
  report.wall_time_seconds = elapsed_since(start);
  write_report_json(report, join(opts, "report.json"));
  report.files.push_back("report.json");
}

}  // namespace

void write_report_json(const RunReport& report, const std::string& path) {
  nlohmann::json root;
  root["command"] = report.command;
  root["wall_time_seconds"] = report.wall_time_seconds;
  root["log_marginal"] = report.log_marginal;
  root["files"] = report.files;
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << root.dump(2) << "\n";
}

RunReport cmd_simulate(const ExperimentConfig& config, const RunOptions& opts) {
  const auto start = Clock::now();
  if (!config.theta_true) throw config_error("simulate requires theta_true");
  ensure_out_dir(opts);

  const OdeSystem sys = make_system(config.system);
  const SolverGrid grid = make_grid(config);
  const ObservationOperator op = make_operator(config);
  const double h_ref = config.h * config.h_ref_factor;

  Xoshiro256 rng = make_substream(config.seed, StreamTag::observation_noise);
  const ObservationSet obs =
      generate_observations(config.x0, *config.theta_true, op, grid, sys, h_ref, rng);
  write_observations_csv(obs, join(opts, "observations.csv"));

  const auto errors = exact_errors(*config.theta_true, config.x0, grid, sys, h_ref);
  write_exact_errors_csv(errors, grid.observation_times(),
                         join(opts, "exact_errors.csv"));

  RunReport report;
  report.command = "simulate";
  report.files = {"observations.csv", "exact_errors.csv"};
  finish(report, config, opts, start);
  return report;
}

RunReport cmd_quantify(const ExperimentConfig& config, const RunOptions& opts) {
  const auto start = Clock::now();
  if (!config.theta_fixed) throw config_error("quantify requires theta_fixed");
  ensure_out_dir(opts);

  const OdeSystem sys = make_system(config.system);
  const SolverGrid grid = make_grid(config);
  const ObservationOperator op = make_operator(config);
  const ObservationSet obs = load_or_generate(config, grid, op, sys);

  const GammaMultiplierPrior prior(config.alpha, config.beta);
  const FilterResult result =
      run_filter(sys, *config.theta_fixed, config.x0, obs, grid, prior,
                 config.init_sigma, op, filter_config(config, opts));

  write_sigma_summary_csv(result, join(opts, "sigma_summary.csv"));
  write_band_csv(result, config.band.level, config.band.draws, config.seed,
                 join(opts, "predictive_band.csv"));

  RunReport report;
  report.command = "quantify";
  report.log_marginal = result.log_marginal;
  report.files = {"sigma_summary.csv", "predictive_band.csv"};
  if (opts.dump_particles) {
    write_particle_dump_csv(result, join(opts, "particles.csv"));
    report.files.push_back("particles.csv");
  }
  finish(report, config, opts, start);
  return report;
}

RunReport cmd_infer(const ExperimentConfig& config, const RunOptions& opts) {
  const auto start = Clock::now();
  if (!config.param_priors) throw config_error("infer requires param_priors");
  ensure_out_dir(opts);

  const OdeSystem sys = make_system(config.system);
  const SolverGrid grid = make_grid(config);
  const ObservationOperator op = make_operator(config);
  const ObservationSet obs = load_or_generate(config, grid, op, sys);
  const GammaMultiplierPrior prior(config.alpha, config.beta);
  const FilterConfig fc = filter_config(config, opts);

  JointOptions full_options;
  if (config.theta_jitter) full_options.theta_jitter_sd = *config.theta_jitter;
  const JointResult full =
      run_joint_filter(sys, config.x0, obs, grid, prior, config.init_sigma,
                       *config.param_priors, op, fc, full_options);
  // Same seed, sigma pinned to zero: the "ignore discretization error"
  // baseline.
  JointOptions baseline_options = full_options;
  baseline_options.zero_sigma = true;
  const JointResult baseline =
      run_joint_filter(sys, config.x0, obs, grid, prior, config.init_sigma,
                       *config.param_priors, op, fc, baseline_options);

  write_theta_cloud_csv(full.final_particles, *config.param_priors,
                        join(opts, "theta_posterior.csv"));
  write_theta_cloud_csv(baseline.final_particles, *config.param_priors,
                        join(opts, "theta_posterior_baseline.csv"));
  const auto full_summary =
      posterior_param_summary(full.final_particles, *config.param_priors);
  const auto baseline_summary =
      posterior_param_summary(baseline.final_particles, *config.param_priors);
  write_param_summary_json(full_summary, join(opts, "theta_summary.json"));
  write_param_summary_json(baseline_summary,
                           join(opts, "theta_summary_baseline.json"));

  FilterResult sigma_view;
  sigma_view.times = full.times;
  sigma_view.sigma_history = full.sigma_history;
  sigma_view.log_marginal = full.log_marginal;
  write_sigma_summary_csv(sigma_view, join(opts, "sigma_summary.csv"));

  std::cout << "unique theta particles: full=" << full.unique_theta_count
            << " baseline=" << baseline.unique_theta_count << "\n";
  std::cout << "log marginal: full=" << format_number(full.log_marginal)
            << " baseline=" << format_number(baseline.log_marginal) << "\n";

  RunReport report;
  report.command = "infer";
  report.log_marginal = full.log_marginal;
  report.files = {"theta_posterior.csv", "theta_posterior_baseline.csv",
                  "theta_summary.json", "theta_summary_baseline.json",
                  "sigma_summary.csv"};
  if (opts.dump_particles) {
    write_particle_dump_csv(sigma_view, join(opts, "particles.csv"));
    report.files.push_back("particles.csv");
  }
  finish(report, config, opts, start);
  return report;
}

RunReport cmd_tune(const ExperimentConfig& config, const RunOptions& opts) {
  const auto start = Clock::now();
  if (!config.tune) throw config_error("tune requires a tune section");
  if (!config.theta_fixed && !config.param_priors) {
    throw config_error("tune requires theta_fixed or param_priors");
  }
  ensure_out_dir(opts);

  const OdeSystem sys = make_system(config.system);
  const SolverGrid grid = make_grid(config);
  const ObservationOperator op = make_operator(config);
  const ObservationSet obs = load_or_generate(config, grid, op, sys);

  RunSpec spec;
  spec.sys = &sys;
  spec.obs = &obs;
  spec.grid = &grid;
  spec.op = &op;
  spec.x0 = config.x0;
  if (config.theta_fixed) {
    spec.theta = *config.theta_fixed;
  } else {
    spec.param_prior = &*config.param_priors;
  }
  spec.init_prior = config.init_sigma;
  spec.lag = config.lag;
  spec.resampling = config.resampling;

  GridSpec gs;
  gs.alphas = config.tune->alphas;
  gs.betas = config.tune->betas;
  gs.constrain_beta_reciprocal = config.tune->beta_reciprocal;
  gs.particles_per_eval = config.tune->particles;
  gs.seed_policy = config.tune->seed_policy;

  const SearchResult result = search(gs, spec, config.seed, opts.threads);
  write_heatmap_csv(result.heatmap, join(opts, "heatmap.csv"));
  write_leaderboard_csv(result.leaderboard, join(opts, "leaderboard.csv"));

  std::cout << "best lambda: alpha=" << format_number(result.best.alpha)
            << " beta=" << format_number(result.best.beta)
            << " alpha*beta=" << format_number(result.best.alpha * result.best.beta)
            << " loglik=" << format_number(result.best.log_likelihood) << "\n";

  RunReport report;
  report.command = "tune";
  report.log_marginal = result.best.log_likelihood;
  report.files = {"heatmap.csv", "leaderboard.csv"};
  finish(report, config, opts, start);
  return report;
}

RunReport cmd_rate_check(const ExperimentConfig& config, const RunOptions& opts) {
  const auto start = Clock::now();
  if (!config.rate) throw config_error("rate-check requires a rate_check section");
  ensure_out_dir(opts);

  const OdeSystem sys = make_system(config.system);
  const ParamVector theta =
      config.theta_fixed ? *config.theta_fixed
                         : (config.theta_true
                                ? *config.theta_true
                                : throw config_error(
                                      "rate-check requires theta_fixed or theta_true"));

  RateCheckSpec spec;
  spec.h_values = config.rate->h_values;
  spec.start_time = config.rate->start_time;
  spec.final_time = config.rate->final_time;
  spec.schedule_c = config.rate->schedule_c;
  spec.init = config.rate->init;
  spec.mc_samples = config.rate->mc_samples;

  const RateCheckReport report_data = rate_check(sys, theta, config.x0, spec, config.seed);
  write_rate_report_csv(report_data, join(opts, "rate_check.csv"));

  if (report_data.degenerate_zero) {
    std::cout << "rate check: degenerate zero case (all estimates are 0)\n";
  } else {
    std::cout << "rate check: fitted slope=" << format_number(report_data.slope)
              << " expected=" << format_number(report_data.expected_slope) << "\n";
  }

  RunReport report;
  report.command = "rate-check";
  report.files = {"rate_check.csv"};
  finish(report, config, opts, start);
  return report;
}

}  // namespace deq
