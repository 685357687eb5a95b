#pragma once

#include <optional>
#include <string>
#include <vector>

#include "deq/joint_filter.hpp"

namespace deq {

// Everything one marginal-likelihood evaluation needs besides lambda.
// Non-owning; the referenced objects must outlive the search.
struct RunSpec {
  const OdeSystem* sys = nullptr;
  const ObservationSet* obs = nullptr;
  const SolverGrid* grid = nullptr;
  const ObservationOperator* op = nullptr;
  StateVector x0;
  ParamVector theta;  // fixed-theta evaluation
  const ParamPrior* param_prior = nullptr;  // joint evaluation when set
  InitialSigmaPrior init_prior = InitialSigmaPrior::zero();
  int particles = 50;
  long lag = -1;
  ResamplingScheme resampling = ResamplingScheme::multinomial;
};

enum class SeedPolicy { shared, per_cell };

struct GridSpec {
  std::vector<double> alphas;
  // Explicit beta list, or the constrained family beta = 1/alpha when empty
  // and constrain_beta_reciprocal is set.
  std::vector<double> betas;
  bool constrain_beta_reciprocal = false;
  int particles_per_eval = 50;
  SeedPolicy seed_policy = SeedPolicy::shared;
};

struct HeatmapCell {
  double alpha = 0.0;
  double beta = 0.0;
  double log_likelihood = 0.0;  // -inf marks collapse / failed evaluation
  std::uint64_t evaluation_seed = 0;
  std::string failure_reason;   // empty on success
};

struct SearchResult {
  HeatmapCell best;
  std::vector<HeatmapCell> leaderboard;  // top 10, non-increasing
  std::vector<HeatmapCell> heatmap;      // all cells, grid order
};

// One filter run under lambda; returns the accumulated log marginal
// likelihood. Filter collapse maps to -inf.
double evaluate_cell(const GammaMultiplierPrior& lambda, const RunSpec& spec,
                     int particles, std::uint64_t seed);

// Evaluates all cells (concurrently when threads > 1, results ordered by
// cell index) and returns the maximizer; ties break toward smaller alpha,
// then smaller beta.
SearchResult search(const GridSpec& grid, const RunSpec& spec,
                    std::uint64_t seed, int threads = 1);

// CSV header: alpha,beta,loglik.
void write_heatmap_csv(const std::vector<HeatmapCell>& cells,
                       const std::string& path);
std::vector<HeatmapCell> read_heatmap_csv(const std::string& path);
// CSV header: rank,alpha,beta,alpha_times_beta,loglik.
void write_leaderboard_csv(const std::vector<HeatmapCell>& leaderboard,
                           const std::string& path);

}  // namespace deq
