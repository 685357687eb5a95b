#include "deq/particle_filter.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "deq/io.hpp"
#include "deq/stats.hpp"

namespace deq {

namespace {

void check_obs_match_grid(const ObservationSet& obs, const SolverGrid& grid) {
  const auto& times = grid.observation_times();
  if (obs.times.size() != times.size()) {
    throw config_error("observations do not cover the solver grid times");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::abs(obs.times[i] - times[i]) >
        1e-9 * std::max(1.0, std::abs(times[i]))) {
      throw config_error("observation times disagree with the solver grid");
    }
  }
}

}  // namespace

FilterResult run_filter(const OdeSystem& sys, const ParamVector& theta,
                        const StateVector& x0, const ObservationSet& obs,
                        const SolverGrid& grid,
                        const GammaMultiplierPrior& prior,
                        const InitialSigmaPrior& init_prior,
                        const ObservationOperator& op,
                        const FilterConfig& config, bool zero_sigma) {
  check_obs_match_grid(obs, grid);
  const int n_times = static_cast<int>(obs.times.size());
  const int d = sys.dimension;

  // Shared theta-trajectory: numerical states at the observation times and
  // the |L~| schedule per interval.
  std::vector<StateVector> states(n_times);
  std::vector<std::vector<LocalErrorEstimate>> abs_errors(
      std::max(0, n_times - 1));
  states[0] = euler_advance(x0, theta, grid.h(), grid.warmup_steps(), sys);
  for (int i = 0; i + 1 < n_times; ++i) {
    auto [next, est] = integrate_interval(states[i], theta, grid, i, sys);
    states[i + 1] = std::move(next);
    abs_errors[i] = std::move(est);
  }

  SsmModel<SigmaVector> model;
  model.sigma_dim = d;
  if (zero_sigma) {
    model.sample_initial = [d](int, Xoshiro256&) { return SigmaVector::Zero(d); };
    model.transition = [](SigmaVector&, int, Xoshiro256&) {};
  } else {
    model.sample_initial = [&, d](int, Xoshiro256& rng) {
      return init_prior.sample(d, grid.h(), rng);
    };
    model.transition = [&](SigmaVector& sigma, int interval, Xoshiro256& rng) {
      propagate_interval_inplace(sigma, abs_errors[interval], prior, rng);
    };
  }
  model.log_observation = [&](const SigmaVector& sigma, int time_index) {
    // Exploding multiplier draws can push sigma past overflow; such
    // particles get zero weight rather than aborting the run.
    try {
      return log_likelihood(obs.values[time_index], states[time_index], sigma, op);
    } catch (const model_error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  model.history_entry = [](const SigmaVector& sigma) { return sigma; };

  auto core = run_ssm_filter(model, n_times, config);

  FilterResult result;
  result.times = obs.times;
  result.sigma_history = std::move(core.history);
  result.log_marginal = core.log_marginal;
  result.ancestry = std::move(core.ancestry);
  return result;
}

std::vector<std::pair<double, double>> credible_band(
    const std::vector<std::vector<SigmaVector>>& sigma_history, int component,
    double level, int n_draws, std::uint64_t seed) {
  if (!(level > 0.0 && level < 1.0)) {
    throw config_error("credible_band: level must lie in (0, 1)");
  }
  if (n_draws < 1) throw config_error("credible_band: need at least one draw");

  std::vector<std::pair<double, double>> band;
  band.reserve(sigma_history.size());
  for (std::size_t i = 0; i < sigma_history.size(); ++i) {
    const auto& cloud = sigma_history[i];
    if (cloud.empty()) throw config_error("credible_band: empty particle cloud");
    Xoshiro256 rng = make_substream(seed, StreamTag::predictive_band, i);
    std::vector<double> draws(n_draws);
    for (int j = 0; j < n_draws; ++j) {
      const auto& sigma =
          cloud[static_cast<std::size_t>(rng.next() % cloud.size())];
      draws[j] = sigma[component] * standard_normal(rng);
    }
    band.emplace_back(quantile(draws, 0.5 * (1.0 - level)),
                      quantile(draws, 0.5 * (1.0 + level)));
  }
  return band;
}

void write_sigma_summary_csv(const FilterResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << "t,component,q025,q500,q975,mean\n";
  for (std::size_t i = 0; i < result.times.size(); ++i) {
    const auto& cloud = result.sigma_history[i];
    const int d = static_cast<int>(cloud[0].size());
    for (int c = 0; c < d; ++c) {
      std::vector<double> comp(cloud.size());
      for (std::size_t k = 0; k < cloud.size(); ++k) comp[k] = cloud[k][c];
      out << format_number(result.times[i]) << "," << c + 1 << ","
          << format_number(quantile(comp, 0.025)) << ","
          << format_number(quantile(comp, 0.5)) << ","
          << format_number(quantile(comp, 0.975)) << ","
          << format_number(mean(comp)) << "\n";
    }
  }
}

void write_particle_dump_csv(const FilterResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << "t,component,particle_index,sigma\n";
  for (std::size_t i = 0; i < result.times.size(); ++i) {
    const auto& cloud = result.sigma_history[i];
    for (std::size_t k = 0; k < cloud.size(); ++k) {
      for (Eigen::Index c = 0; c < cloud[k].size(); ++c) {
        out << format_number(result.times[i]) << "," << c + 1 << "," << k << ","
            << format_number(cloud[k][c]) << "\n";
      }
    }
  }
}

void write_band_csv(const FilterResult& result, double level, int n_draws,
                    std::uint64_t seed, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << "t,component,lower,upper\n";
  const int d = static_cast<int>(result.sigma_history[0][0].size());
  for (int c = 0; c < d; ++c) {
    const auto band =
        credible_band(result.sigma_history, c, level, n_draws, seed);
    for (std::size_t i = 0; i < result.times.size(); ++i) {
      out << format_number(result.times[i]) << "," << c + 1 << ","
          << format_number(band[i].first) << ","
          << format_number(band[i].second) << "\n";
    }
  }
}

}  // namespace deq
