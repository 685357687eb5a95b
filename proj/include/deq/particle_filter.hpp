#pragma once

#include <string>
#include <utility>
#include <vector>

#include "deq/error_prior.hpp"
#include "deq/filter_core.hpp"
#include "deq/observation.hpp"
#include "deq/ode.hpp"

namespace deq {

struct FilterResult {
  std::vector<double> times;
  // sigma_history[i][k]: smoothed sigma at observation time i for final
  // particle k (uniform weights).
  std::vector<std::vector<SigmaVector>> sigma_history;
  double log_marginal = 0.0;
  std::vector<std::vector<int>> ancestry;
};

// Particle filter over discretization-error standard deviations with fixed
// theta. The Euler trajectory and its local-error estimates are computed
// once and shared by all particles. When zero_sigma is set, sigma is pinned
// to the zero vector throughout (the "ignore discretization error"
// baseline).
FilterResult run_filter(const OdeSystem& sys, const ParamVector& theta,
                        const StateVector& x0, const ObservationSet& obs,
                        const SolverGrid& grid,
                        const GammaMultiplierPrior& prior,
                        const InitialSigmaPrior& init_prior,
                        const ObservationOperator& op,
                        const FilterConfig& config, bool zero_sigma = false);

// Per-time (lower, upper) empirical quantiles of predictive draws
// r ~ N(0, sigma_c^2), with sigma resampled from the smoothed cloud.
std::vector<std::pair<double, double>> credible_band(
    const std::vector<std::vector<SigmaVector>>& sigma_history, int component,
    double level, int n_draws, std::uint64_t seed);

// CSV emission. Smoothed summary header: t,component,q025,q500,q975,mean.
// Raw dump header: t,component,particle_index,sigma.
// Band header: t,component,lower,upper.
void write_sigma_summary_csv(const FilterResult& result, const std::string& path);
void write_particle_dump_csv(const FilterResult& result, const std::string& path);
void write_band_csv(const FilterResult& result, double level, int n_draws,
                    std::uint64_t seed, const std::string& path);

}  // namespace deq
