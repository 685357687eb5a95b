#pragma once

#include <map>
#include <string>
#include <vector>

#include "deq/particle_filter.hpp"

namespace deq {

// Independent per-component parameter prior. sd == 0 is an exact point
// mass (used by degenerate-equivalence checks); truncated components are
// drawn by rejection.
struct ParamMarginal {
  enum class Type { normal, truncated_normal };

  std::string name;
  Type type = Type::normal;
  double mean = 0.0;
  double sd = 1.0;
  double lower = 0.0;  // truncated_normal only
  double upper = 0.0;

  static ParamMarginal normal(std::string name, double mean, double sd);
  static ParamMarginal truncated(std::string name, double mean, double sd,
                                 double lower, double upper);
};

struct ParamPrior {
  std::vector<ParamMarginal> marginals;
  int dimension() const { return static_cast<int>(marginals.size()); }
};

double sample_marginal(const ParamMarginal& marginal, Xoshiro256& rng);
ParamVector sample_param_prior(const ParamPrior& prior, Xoshiro256& rng);

// One Monte-Carlo sample of the augmented latent (sigma, theta) plus the
// cached numerical state of its own Euler trajectory.
struct AugmentedParticle {
  SigmaVector sigma;
  ParamVector theta;
  StateVector x;
  bool dead = false;  // integration failed or parameters invalid
};

struct JointResult {
  std::vector<double> times;
  std::vector<std::vector<SigmaVector>> sigma_history;
  std::vector<AugmentedParticle> final_particles;
  double log_marginal = 0.0;
  std::vector<std::vector<int>> ancestry;
  int unique_theta_count = 0;
};

struct JointOptions {
  // Pin sigma to zero throughout (the "ignore discretization error"
  // baseline).
  bool zero_sigma = false;
  // Per-component Gaussian jitter applied to theta at every prediction.
  // Empty keeps the constant transition theta' = theta; enabling this is a
  // degeneracy remedy that deviates from the plain self-organizing
  // transition, so it is off by default.
  Eigen::VectorXd theta_jitter_sd;
};

// Self-organizing state-space filter: theta follows a constant transition,
// each particle advances its own Euler trajectory incrementally, and
// (sigma, theta, x) are resampled together. Particles whose trajectory
// fails (e.g. invalid parameter draws) receive weight zero at the next
// correction instead of aborting the run.
JointResult run_joint_filter(const OdeSystem& sys, const StateVector& x0,
                             const ObservationSet& obs, const SolverGrid& grid,
                             const GammaMultiplierPrior& prior,
                             const InitialSigmaPrior& init_prior,
                             const ParamPrior& param_prior,
                             const ObservationOperator& op,
                             const FilterConfig& config,
                             const JointOptions& options = {});

inline JointResult run_joint_filter(const OdeSystem& sys, const StateVector& x0,
                                    const ObservationSet& obs,
                                    const SolverGrid& grid,
                                    const GammaMultiplierPrior& prior,
                                    const InitialSigmaPrior& init_prior,
                                    const ParamPrior& param_prior,
                                    const ObservationOperator& op,
                                    const FilterConfig& config, bool zero_sigma) {
  JointOptions options;
  options.zero_sigma = zero_sigma;
  return run_joint_filter(sys, x0, obs, grid, prior, init_prior, param_prior, op,
                          config, options);
}

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double std_dev = 0.0;  // population standard deviation
  std::map<double, double> quantiles;
  std::vector<double> histogram_edges;
  std::vector<int> histogram_counts;
};

std::vector<ParamSummary> posterior_param_summary(
    const std::vector<AugmentedParticle>& cloud, const ParamPrior& prior,
    int histogram_bins = 50);

// CSV header: param_name,particle_index,value.
void write_theta_cloud_csv(const std::vector<AugmentedParticle>& cloud,
                           const ParamPrior& prior, const std::string& path);
void write_param_summary_json(const std::vector<ParamSummary>& summaries,
                              const std::string& path);

}  // namespace deq
