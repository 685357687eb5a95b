#pragma once

#include <vector>

#include "deq/ode.hpp"
#include "deq/rng.hpp"
#include "deq/types.hpp"

namespace deq {

// Transition law for the error standard deviations: per fine step,
// sigma <- m * sigma + |local error estimate| with m ~ Gamma(alpha, beta)
// in the shape-scale parameterization, so E[m] = alpha * beta.
struct GammaMultiplierPrior {
  double alpha = 1.0;  // shape
  double beta = 1.0;   // scale

  GammaMultiplierPrior() = default;
  GammaMultiplierPrior(double alpha, double beta);

  double mean() const { return alpha * beta; }
  double variance() const { return alpha * beta * beta; }
};

double sample_multiplier(const GammaMultiplierPrior& prior, Xoshiro256& rng);

// Prior on sigma at the first observation time. "scaled" draws the
// deterministic vector c0 * h^beta_exponent * (1, ..., 1).
struct InitialSigmaPrior {
  enum class Mode { zero, fixed, scaled };

  Mode mode = Mode::zero;
  SigmaVector fixed_value;      // fixed mode
  double c0 = 1.0;              // scaled mode
  double beta_exponent = 1.0;   // scaled mode

  static InitialSigmaPrior zero();
  static InitialSigmaPrior fixed(SigmaVector value);
  static InitialSigmaPrior scaled(double c0, double beta_exponent);

  SigmaVector sample(int dim, double h, Xoshiro256& rng) const;
};

// One fine-step transition with a given multiplier draw.
SigmaVector transition_sigma(const SigmaVector& sigma, double m,
                             const SigmaVector& abs_local_error);

// Applies one observation interval: k fine-step transitions, one
// independent multiplier draw per step.
SigmaVector propagate_interval(const SigmaVector& sigma,
                               const std::vector<LocalErrorEstimate>& abs_errors,
                               const GammaMultiplierPrior& prior,
                               Xoshiro256& rng);

// In-place variant for the per-particle filter loop.
void propagate_interval_inplace(SigmaVector& sigma,
                                const std::vector<LocalErrorEstimate>& abs_errors,
                                const GammaMultiplierPrior& prior,
                                Xoshiro256& rng);

// --- Step-size convergence-rate harness ---------------------------------

struct RateCheckEntry {
  double h = 0.0;
  double mean_sq_sigma = 0.0;  // MC estimate of E ||sigma_{t_N}||^2
  double stderr_sq = 0.0;
};

struct RateCheckReport {
  std::vector<RateCheckEntry> entries;
  double slope = 0.0;           // fitted log-log slope of mean_sq_sigma vs h
  double expected_slope = 0.0;  // 2 * min(solver order, init beta exponent)
  bool degenerate_zero = false; // all estimates exactly zero
};

struct RateCheckSpec {
  std::vector<double> h_values;      // at least 3
  double start_time = 0.0;
  double final_time = 10.0;          // t_N; each h must divide the span
  double schedule_c = 1.0;           // Gamma scale = c * h^2, shape = 1 / scale
  InitialSigmaPrior init = InitialSigmaPrior::zero();
  int mc_samples = 2000;
  double solver_order = 1.0;         // explicit Euler
};

// Simulates the prior forward along the Euler trajectory of (sys, theta)
// for each h and fits the log-log slope of E ||sigma_{t_N}||^2.
RateCheckReport rate_check(const OdeSystem& sys, const ParamVector& theta,
                           const StateVector& x0, const RateCheckSpec& spec,
                           std::uint64_t seed);

}  // namespace deq
