#pragma once

#include <optional>
#include <string>
#include <vector>

#include "deq/error_prior.hpp"
#include "deq/hyperparam.hpp"
#include "deq/joint_filter.hpp"

namespace deq {

struct TuneConfig {
  std::vector<double> alphas;
  std::vector<double> betas;  // empty when beta_family == "reciprocal"
  bool beta_reciprocal = false;
  int particles = 50;
  SeedPolicy seed_policy = SeedPolicy::shared;
};

struct RateCheckConfig {
  std::vector<double> h_values;
  double start_time = 0.0;
  double final_time = 10.0;
  double schedule_c = 1.0;
  int mc_samples = 2000;
  InitialSigmaPrior init = InitialSigmaPrior::zero();
};

struct BandConfig {
  double level = 0.95;
  int draws = 100000;
};

// One experiment description, loaded from a JSON config file. See
// docs/config.md for the schema.
struct ExperimentConfig {
  std::string system;
  StateVector x0;
  double initial_time = 0.0;

  std::optional<ParamVector> theta_true;   // simulation-generating value
  std::optional<ParamVector> theta_fixed;  // quantify / fixed-theta tune

  double h = 0.0;
  std::vector<double> observation_times;

  Eigen::MatrixXd H;
  Eigen::MatrixXd noise_cov;

  double alpha = 1.0;
  double beta = 1.0;
  InitialSigmaPrior init_sigma = InitialSigmaPrior::zero();
  std::optional<ParamPrior> param_priors;
  // Off-by-default prediction-time jitter on theta (deviates from the plain
  // constant transition; degeneracy remedy only).
  std::optional<Eigen::VectorXd> theta_jitter;

  int particles = 1000;
  long lag = -1;
  std::uint64_t seed = 1;
  ResamplingScheme resampling = ResamplingScheme::multinomial;
  double h_ref_factor = 0.01;  // reference solver step = h * h_ref_factor

  std::optional<std::string> observations_file;
  BandConfig band;
  std::optional<TuneConfig> tune;
  std::optional<RateCheckConfig> rate;
};

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& config, const std::string& path);

// Cross-field validation shared by all commands; per-command requirements
// (theta, priors, grids) are checked in the command implementations.
void validate_config(const ExperimentConfig& config);

SolverGrid make_grid(const ExperimentConfig& config);
ObservationOperator make_operator(const ExperimentConfig& config);

}  // namespace deq
