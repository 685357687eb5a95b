#include "deq/joint_filter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "deq/io.hpp"
#include "deq/stats.hpp"

namespace deq {

ParamMarginal ParamMarginal::normal(std::string name, double mean, double sd) {
  if (sd < 0.0) throw config_error("param prior '" + name + "': sd must be >= 0");
  ParamMarginal m;
  m.name = std::move(name);
  m.type = Type::normal;
  m.mean = mean;
  m.sd = sd;
  return m;
}

ParamMarginal ParamMarginal::truncated(std::string name, double mean, double sd,
                                       double lower, double upper) {
  if (sd < 0.0) throw config_error("param prior '" + name + "': sd must be >= 0");
  if (!(lower < upper)) {
    throw config_error("param prior '" + name + "': needs lower < upper");
  }
  ParamMarginal m;
  m.name = std::move(name);
  m.type = Type::truncated_normal;
  m.mean = mean;
  m.sd = sd;
  m.lower = lower;
  m.upper = upper;
  return m;
}

double sample_marginal(const ParamMarginal& marginal, Xoshiro256& rng) {
  if (marginal.sd == 0.0) {
    if (marginal.type == ParamMarginal::Type::truncated_normal &&
        (marginal.mean < marginal.lower || marginal.mean > marginal.upper)) {
      throw config_error("param prior '" + marginal.name +
                         "': point mass outside truncation interval");
    }
    return marginal.mean;
  }
  if (marginal.type == ParamMarginal::Type::normal) {
    return marginal.mean + marginal.sd * standard_normal(rng);
  }
  // Rejection from the untruncated normal. The acceptance-rate guard turns
  // pathological truncation setups into a configuration error.
  constexpr long kMaxAttempts = 1000000;
  for (long attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const double draw = marginal.mean + marginal.sd * standard_normal(rng);
    if (draw >= marginal.lower && draw <= marginal.upper) return draw;
  }
  throw config_error("param prior '" + marginal.name +
                     "': truncated-normal acceptance rate below 1e-6");
}

ParamVector sample_param_prior(const ParamPrior& prior, Xoshiro256& rng) {
  ParamVector theta(prior.dimension());
  for (int c = 0; c < prior.dimension(); ++c) {
    theta[c] = sample_marginal(prior.marginals[c], rng);
  }
  return theta;
}

JointResult run_joint_filter(const OdeSystem& sys, const StateVector& x0,
                             const ObservationSet& obs, const SolverGrid& grid,
                             const GammaMultiplierPrior& prior,
                             const InitialSigmaPrior& init_prior,
                             const ParamPrior& param_prior,
                             const ObservationOperator& op,
                             const FilterConfig& config,
                             const JointOptions& options) {
  if (param_prior.dimension() != sys.param_dimension) {
    throw config_error("parameter prior dimension does not match the system");
  }
  const bool zero_sigma = options.zero_sigma;
  const bool jitter = options.theta_jitter_sd.size() > 0;
  if (jitter && options.theta_jitter_sd.size() != sys.param_dimension) {
    throw config_error("theta jitter dimension does not match the system");
  }
  const int n_times = static_cast<int>(obs.times.size());
  const int d = sys.dimension;

  SsmModel<AugmentedParticle> model;
  model.sigma_dim = d;
  model.sample_initial = [&, zero_sigma](int slot, Xoshiro256& rng) {
    AugmentedParticle p;
    // theta draws come from a dedicated substream so the sigma stream
    // stays aligned with the fixed-theta filter.
    Xoshiro256 theta_rng = make_substream(config.seed, StreamTag::param_init,
                                          static_cast<std::uint64_t>(slot));
    p.theta = sample_param_prior(param_prior, theta_rng);
    p.sigma = zero_sigma ? SigmaVector::Zero(d).eval()
                         : init_prior.sample(d, grid.h(), rng);
    try {
      p.x = euler_advance(x0, p.theta, grid.h(), grid.warmup_steps(), sys);
    } catch (const std::runtime_error&) {
      p.x = x0;
      p.dead = true;
    }
    return p;
  };
  // Fused per-particle advance: each fine step updates the particle's own
  // Euler trajectory and applies the sigma transition with the fresh local
  // error, without materializing the estimate list. Arithmetic and RNG
  // consumption match integrate_interval + propagate_interval exactly, so a
  // point-mass theta prior reproduces the fixed-theta filter bit-for-bit.
  model.transition = [&, zero_sigma, jitter](AugmentedParticle& p, int interval,
                                             Xoshiro256& rng) {
    if (p.dead) return;
    thread_local StepWorkspace ws;
    thread_local SigmaVector abs_err;
    ws.resize(d);
    abs_err.resize(d);
    (void)interval;
    if (jitter) {
      for (Eigen::Index c = 0; c < p.theta.size(); ++c) {
        p.theta[c] += options.theta_jitter_sd[c] * standard_normal(rng);
      }
    }
    try {
      for (int j = 0; j < grid.steps_per_interval(); ++j) {
        euler_step_with_error(p.x, abs_err, p.theta, grid.h(), sys, ws);
        if (!zero_sigma) {
          const double m = sample_multiplier(prior, rng);
          p.sigma = m * p.sigma + abs_err;
        }
      }
    } catch (const std::runtime_error&) {
      p.dead = true;
    }
  };
  model.log_observation = [&](const AugmentedParticle& p, int time_index) {
    if (p.dead) return -std::numeric_limits<double>::infinity();
    try {
      return log_likelihood(obs.values[time_index], p.x, p.sigma, op);
    } catch (const model_error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  model.history_entry = [](const AugmentedParticle& p) { return p.sigma; };

  auto core = run_ssm_filter(model, n_times, config);

  JointResult result;
  result.times = obs.times;
  result.sigma_history = std::move(core.history);
  result.log_marginal = core.log_marginal;
  result.ancestry = std::move(core.ancestry);
  result.final_particles = std::move(core.final_particles);

  std::set<std::vector<double>> unique;
  for (const auto& p : result.final_particles) {
    unique.insert(std::vector<double>(p.theta.data(), p.theta.data() + p.theta.size()));
  }
  result.unique_theta_count = static_cast<int>(unique.size());
  return result;
}

std::vector<ParamSummary> posterior_param_summary(
    const std::vector<AugmentedParticle>& cloud, const ParamPrior& prior,
    int histogram_bins) {
  if (cloud.empty()) throw config_error("posterior_param_summary: empty cloud");
  if (histogram_bins < 1) histogram_bins = 1;

  std::vector<ParamSummary> summaries;
  for (int c = 0; c < prior.dimension(); ++c) {
    std::vector<double> values(cloud.size());
    for (std::size_t k = 0; k < cloud.size(); ++k) values[k] = cloud[k].theta[c];

    ParamSummary s;
    s.name = prior.marginals[c].name;
    s.mean = mean(values);
    s.std_dev = stddev_population(values);
    for (double q : {0.025, 0.25, 0.5, 0.75, 0.975}) {
      s.quantiles[q] = quantile(values, q);
    }

    const double lo = *std::min_element(values.begin(), values.end());
    const double hi = *std::max_element(values.begin(), values.end());
    s.histogram_counts.assign(histogram_bins, 0);
    for (int b = 0; b <= histogram_bins; ++b) {
      s.histogram_edges.push_back(
          lo + (hi - lo) * static_cast<double>(b) / histogram_bins);
    }
    const double width = hi - lo;
    for (double v : values) {
      int bin = width > 0.0
                    ? static_cast<int>((v - lo) / width * histogram_bins)
                    : 0;
      bin = std::clamp(bin, 0, histogram_bins - 1);
      ++s.histogram_counts[bin];
    }
    summaries.push_back(std::move(s));
  }
  return summaries;
}

void write_theta_cloud_csv(const std::vector<AugmentedParticle>& cloud,
                           const ParamPrior& prior, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << "param_name,particle_index,value\n";
  for (int c = 0; c < prior.dimension(); ++c) {
    for (std::size_t k = 0; k < cloud.size(); ++k) {
      out << prior.marginals[c].name << "," << k << ","
          << format_number(cloud[k].theta[c]) << "\n";
    }
  }
}

void write_param_summary_json(const std::vector<ParamSummary>& summaries,
                              const std::string& path) {
  nlohmann::json root;
  root["params"] = nlohmann::json::array();
  for (const auto& s : summaries) {
    nlohmann::json item;
    item["name"] = s.name;
    item["mean"] = s.mean;
    item["std"] = s.std_dev;
    nlohmann::json q;
    for (const auto& [level, value] : s.quantiles) {
      q[format_number(level)] = value;
    }
    item["quantiles"] = q;
    item["histogram"] = {{"edges", s.histogram_edges},
                         {"counts", s.histogram_counts}};
    root["params"].push_back(item);
  }
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << root.dump(2) << "\n";
}

}  // namespace deq
