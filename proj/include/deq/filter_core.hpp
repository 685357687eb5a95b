#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "deq/parallel.hpp"
#include "deq/rng.hpp"
#include "deq/types.hpp"

namespace deq {

enum class ResamplingScheme { multinomial, systematic };

struct FilterConfig {
  int particles = 1000;
  // Smoothing window: re-indexing on resampling touches the last `lag`
  // stored times in addition to the current one; negative means the full
  // history (complete smoothing).
  long lag = -1;
  ResamplingScheme resampling = ResamplingScheme::multinomial;
  std::uint64_t seed = 1;
  int threads = 1;
};

// State-space model hooks. The production sigma filter, the joint
// (sigma, theta) filter and the linear-Gaussian oracle tests all
// instantiate this.
template <class Latent>
struct SsmModel {
  int sigma_dim = 0;
  // Draw the latent at the first observation time. `slot` identifies the
  // particle's RNG substream.
  std::function<Latent(int slot, Xoshiro256& rng)> sample_initial;
  // Advance the latent across observation interval `interval`.
  std::function<void(Latent& latent, int interval, Xoshiro256& rng)> transition;
  // log p(y*_{time_index} | latent); -inf marks a dead particle.
  std::function<double(const Latent& latent, int time_index)> log_observation;
  // Sigma component stored into the smoothing history.
  std::function<SigmaVector(const Latent& latent)> history_entry;
};

namespace detail {

inline double log_sum_exp(const std::vector<double>& logs) {
  double max_log = -std::numeric_limits<double>::infinity();
  for (double v : logs) max_log = std::max(max_log, v);
  if (!std::isfinite(max_log)) return max_log;
  double sum = 0.0;
  for (double v : logs) sum += std::exp(v - max_log);
  return max_log + std::log(sum);
}

// Categorical(w_1, ..., w_K) via inverse CDF on the cumulative weights.
inline void multinomial_indices(const std::vector<double>& weights,
                                Xoshiro256& rng, std::vector<int>& out) {
  const int n = static_cast<int>(weights.size());
  std::vector<double> cumulative(weights.size());
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    acc += weights[k];
    cumulative[k] = acc;
  }
  cumulative.back() = 1.0;
  for (int k = 0; k < n; ++k) {
    const double u = uniform01(rng);
    out[k] = static_cast<int>(
        std::lower_bound(cumulative.begin(), cumulative.end(), u) -
        cumulative.begin());
  }
}

inline void systematic_indices(const std::vector<double>& weights,
                               Xoshiro256& rng, std::vector<int>& out) {
  const int n = static_cast<int>(weights.size());
  const double u0 = uniform01(rng) / n;
  double acc = 0.0;
  int k = 0;
  for (int j = 0; j < n; ++j) {
    const double target = u0 + static_cast<double>(j) / n;
    while (acc + weights[k] < target && k + 1 < n) {
      acc += weights[k];
      ++k;
    }
    out[j] = k;
  }
}

}  // namespace detail

// Particle filter with unconditional per-step resampling and simultaneous
// history re-indexing (full or fixed-lag window). Histories are stored as
// per-time value arrays plus index threads; re-indexing permutes the
// threads, values are never copied until reconstruction.
template <class Latent>
class ParticleFilter {
 public:
  ParticleFilter(SsmModel<Latent> model, FilterConfig config)
      : model_(std::move(model)), config_(config) {
    if (config_.particles < 1) {
      throw config_error("filter: particle count must be >= 1");
    }
    const int K = config_.particles;
    particles_.resize(K);
    scratch_.resize(K);
    log_weights_.resize(K);
    weights_.resize(K);
    indices_.resize(K);
    identity_.resize(K);
    for (int k = 0; k < K; ++k) identity_[k] = k;
    slot_rng_.reserve(K);
    for (int k = 0; k < K; ++k) {
      slot_rng_.push_back(make_substream(config_.seed, StreamTag::particle_slot,
                                         static_cast<std::uint64_t>(k)));
    }
    resample_rng_ = make_substream(config_.seed, StreamTag::resampling);
  }

  int particle_count() const { return config_.particles; }

  // Algorithm line "Generate Particles at Time t_0".
  void init() {
    parallel_for(config_.particles, config_.threads, [&](int k) {
      particles_[k] = model_.sample_initial(k, slot_rng_[k]);
    });
    push_history();
  }

  // Prediction step: sample the Markov transition per particle; weights are
  // untouched.
  void predict(int interval) {
    parallel_for(config_.particles, config_.threads, [&](int k) {
      model_.transition(particles_[k], interval, slot_rng_[k]);
    });
    push_history();
  }

  // Correction weights and the marginal-likelihood increment
  // log((1/K) sum_k u_k), taken from the pre-resampling unnormalized
  // weights. Throws on total weight collapse.
  double weigh(int time_index) {
    const int K = config_.particles;
    parallel_for(K, config_.threads, [&](int k) {
      double lw = model_.log_observation(particles_[k], time_index);
      if (std::isnan(lw)) lw = -std::numeric_limits<double>::infinity();
      log_weights_[k] = lw;
    });
    const double lse = detail::log_sum_exp(log_weights_);
    if (!std::isfinite(lse)) {
      throw filter_collapse_error(
          "filter collapse: all particle weights vanished at observation index " +
              std::to_string(time_index),
          time_index);
    }
    for (int k = 0; k < K; ++k) {
      weights_[k] = std::exp(log_weights_[k] - lse);
    }
    const double increment = lse - std::log(static_cast<double>(K));
    log_marginal_ += increment;
    return increment;
  }

  // Resampling plus the simultaneous smoothing update: particle k becomes a
  // copy of ancestor indices[k], and stored history threads inside the lag
  // window are re-indexed by the same map.
  void resample_and_smooth(const std::vector<int>& indices) {
    const int K = config_.particles;
    parallel_for(K, config_.threads,
                 [&](int k) { scratch_[k] = particles_[indices[k]]; });
    std::swap(particles_, scratch_);
    ancestry_.push_back(indices);

    const long i = static_cast<long>(thread_idx_.size()) - 1;
    const long window =
        config_.lag < 0 ? i + 1 : std::min<long>(config_.lag + 1, i + 1);
    const long first = i + 1 - window;
    parallel_for(static_cast<int>(window), config_.threads, [&](int w) {
      auto& row = thread_idx_[static_cast<std::size_t>(first + w)];
      std::vector<int> updated(K);
      for (int k = 0; k < K; ++k) updated[k] = row[indices[k]];
      row = std::move(updated);
    });
  }

  // Full correction step: weigh, draw Categorical(w) indices, resample.
  double correct(int time_index) {
    const double increment = weigh(time_index);
    if (config_.resampling == ResamplingScheme::multinomial) {
      detail::multinomial_indices(weights_, resample_rng_, indices_);
    } else {
      detail::systematic_indices(weights_, resample_rng_, indices_);
    }
    resample_and_smooth(indices_);
    return increment;
  }

  const std::vector<Latent>& particles() const { return particles_; }
  const std::vector<double>& weights() const { return weights_; }
  double log_marginal() const { return log_marginal_; }
  const std::vector<std::vector<int>>& ancestry() const { return ancestry_; }
  int stored_times() const { return static_cast<int>(raw_.size()); }

  // Smoothed history entry at stored time i for current particle k.
  const SigmaVector& history_value(int i, int k) const {
    return raw_[i][thread_idx_[i][k]];
  }

  std::vector<std::vector<SigmaVector>> reconstruct_history() const {
    std::vector<std::vector<SigmaVector>> out(raw_.size());
    parallel_for(static_cast<int>(raw_.size()), config_.threads, [&](int i) {
      out[i].resize(config_.particles);
      for (int k = 0; k < config_.particles; ++k) {
        out[i][k] = raw_[i][thread_idx_[i][k]];
      }
    });
    return out;
  }

 private:
  void push_history() {
    raw_.emplace_back(config_.particles);
    auto& raw_i = raw_.back();
    parallel_for(config_.particles, config_.threads,
                 [&](int k) { raw_i[k] = model_.history_entry(particles_[k]); });
    thread_idx_.push_back(identity_);
  }

  SsmModel<Latent> model_;
  FilterConfig config_;
  std::vector<Latent> particles_;
  std::vector<Latent> scratch_;
  std::vector<Xoshiro256> slot_rng_;
  Xoshiro256 resample_rng_;
  std::vector<double> log_weights_;
  std::vector<double> weights_;
  std::vector<int> indices_;
  std::vector<int> identity_;
  std::vector<std::vector<SigmaVector>> raw_;
  std::vector<std::vector<int>> thread_idx_;
  std::vector<std::vector<int>> ancestry_;
  double log_marginal_ = 0.0;
};

template <class Latent>
struct FilterOutput {
  // history[i][k]: smoothed history entry at observation time i for final
  // particle k (uniform weights).
  std::vector<std::vector<SigmaVector>> history;
  std::vector<Latent> final_particles;
  double log_marginal = 0.0;
  // ancestry[i][k]: resampling index drawn at time i for slot k.
  std::vector<std::vector<int>> ancestry;
};

// Full filter pass: assimilates the observation at time 0 right after
// initialization, then alternates prediction and correction.
template <class Latent>
FilterOutput<Latent> run_ssm_filter(const SsmModel<Latent>& model, int n_times,
                                    const FilterConfig& config) {
  if (n_times < 1) throw config_error("filter: need at least one observation");
  ParticleFilter<Latent> pf(model, config);
  pf.init();
  pf.correct(0);
  for (int i = 1; i < n_times; ++i) {
    pf.predict(i - 1);
    pf.correct(i);
  }
  FilterOutput<Latent> out;
  out.history = pf.reconstruct_history();
  out.log_marginal = pf.log_marginal();
  out.ancestry = pf.ancestry();
  out.final_particles = pf.particles();
  return out;
}

}  // namespace deq
