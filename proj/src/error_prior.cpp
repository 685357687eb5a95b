#include "deq/error_prior.hpp"

#include <cmath>
#include <limits>

namespace deq {

GammaMultiplierPrior::GammaMultiplierPrior(double alpha, double beta)
    : alpha(alpha), beta(beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw config_error("GammaMultiplierPrior: alpha and beta must be > 0");
  }
}

double sample_multiplier(const GammaMultiplierPrior& prior, Xoshiro256& rng) {
  return sample_gamma(prior.alpha, prior.beta, rng);
}

InitialSigmaPrior InitialSigmaPrior::zero() { return InitialSigmaPrior{}; }

InitialSigmaPrior InitialSigmaPrior::fixed(SigmaVector value) {
  if ((value.array() < 0.0).any()) {
    throw config_error("InitialSigmaPrior: fixed value must be nonnegative");
  }
  InitialSigmaPrior p;
  p.mode = Mode::fixed;
  p.fixed_value = std::move(value);
  return p;
}

InitialSigmaPrior InitialSigmaPrior::scaled(double c0, double beta_exponent) {
  if (!(c0 >= 0.0) || !(beta_exponent >= 0.0)) {
    throw config_error("InitialSigmaPrior: scaled mode needs c0 >= 0, beta >= 0");
  }
  InitialSigmaPrior p;
  p.mode = Mode::scaled;
  p.c0 = c0;
  p.beta_exponent = beta_exponent;
  return p;
}

SigmaVector InitialSigmaPrior::sample(int dim, double h, Xoshiro256&) const {
  switch (mode) {
    case Mode::zero:
      return SigmaVector::Zero(dim);
    case Mode::fixed:
      if (fixed_value.size() != dim) {
        throw config_error("InitialSigmaPrior: fixed value dimension mismatch");
      }
      return fixed_value;
    case Mode::scaled:
      return SigmaVector::Constant(dim, c0 * std::pow(h, beta_exponent));
  }
  return SigmaVector::Zero(dim);
}

SigmaVector transition_sigma(const SigmaVector& sigma, double m,
                             const SigmaVector& abs_local_error) {
  if (sigma.size() != abs_local_error.size()) {
    throw config_error("transition_sigma: dimension mismatch");
  }
  return m * sigma + abs_local_error;
}

void propagate_interval_inplace(SigmaVector& sigma,
                                const std::vector<LocalErrorEstimate>& abs_errors,
                                const GammaMultiplierPrior& prior,
                                Xoshiro256& rng) {
  for (const auto& est : abs_errors) {
    if (sigma.size() != est.componentwise_abs.size()) {
      throw config_error("propagate_interval: dimension mismatch");
    }
    const double m = sample_multiplier(prior, rng);
    sigma = m * sigma + est.componentwise_abs;
  }
}

SigmaVector propagate_interval(const SigmaVector& sigma,
                               const std::vector<LocalErrorEstimate>& abs_errors,
                               const GammaMultiplierPrior& prior,
                               Xoshiro256& rng) {
  SigmaVector current = sigma;
  propagate_interval_inplace(current, abs_errors, prior, rng);
  return current;
}

RateCheckReport rate_check(const OdeSystem& sys, const ParamVector& theta,
                           const StateVector& x0, const RateCheckSpec& spec,
                           std::uint64_t seed) {
  if (spec.h_values.size() < 3) {
    throw config_error("rate_check: need at least 3 step sizes");
  }
  if (!(spec.final_time > spec.start_time)) {
    throw config_error("rate_check: final time must exceed start time");
  }
  if (spec.mc_samples < 2) {
    throw config_error("rate_check: need at least 2 MC samples");
  }

  RateCheckReport report;
  const double span = spec.final_time - spec.start_time;
  for (std::size_t hi = 0; hi < spec.h_values.size(); ++hi) {
    const double h = spec.h_values[hi];
    const double ratio = span / h;
    const long n_steps = std::lround(ratio);
    if (n_steps < 1 || std::abs(n_steps * h - span) > 1e-9 * std::max(1.0, span)) {
      throw config_error("rate_check: time span is not an integer multiple of h");
    }

    // |L~| schedule along the single Euler trajectory; shared by all samples.
    std::vector<SigmaVector> abs_errors;
    abs_errors.reserve(static_cast<std::size_t>(n_steps));
    StateVector state = x0;
    StepWorkspace ws;
    ws.resize(sys.dimension);
    SigmaVector abs_err(sys.dimension);
    for (long j = 0; j < n_steps; ++j) {
      euler_step_with_error(state, abs_err, theta, h, sys, ws);
      abs_errors.push_back(abs_err);
    }

    // Condition (I) schedule: scale = c h^2, shape = 1/scale, so the mean
    // multiplier is 1 and E||I - M||_F^2 = d_X c h^2.
    const double scale = spec.schedule_c * h * h;
    const GammaMultiplierPrior prior(1.0 / scale, scale);

    Xoshiro256 rng = make_substream(seed, StreamTag::rate_check, hi);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int s = 0; s < spec.mc_samples; ++s) {
      SigmaVector sigma = spec.init.sample(sys.dimension, h, rng);
      for (const auto& abs_err : abs_errors) {
        const double m = sample_multiplier(prior, rng);
        sigma = m * sigma + abs_err;
      }
      const double sq = sigma.squaredNorm();
      sum += sq;
      sum_sq += sq * sq;
    }
    const double n = static_cast<double>(spec.mc_samples);
    RateCheckEntry entry;
    entry.h = h;
    entry.mean_sq_sigma = sum / n;
    const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
    entry.stderr_sq = std::sqrt(var / n);
    report.entries.push_back(entry);
  }

  double beta_exp = std::numeric_limits<double>::infinity();
  if (spec.init.mode == InitialSigmaPrior::Mode::scaled && spec.init.c0 > 0.0) {
    beta_exp = spec.init.beta_exponent;
  }
  report.expected_slope = 2.0 * std::min(spec.solver_order, beta_exp);

  report.degenerate_zero = true;
  for (const auto& e : report.entries) {
    if (e.mean_sq_sigma > 0.0) report.degenerate_zero = false;
  }
  if (report.degenerate_zero) {
    report.slope = std::numeric_limits<double>::quiet_NaN();
    return report;
  }

  // Least-squares slope of log(estimate) on log(h).
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(report.entries.size());
  for (const auto& e : report.entries) {
    const double lx = std::log(e.h);
    const double ly = std::log(e.mean_sq_sigma);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  report.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return report;
}

}  // namespace deq
