#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace deq {

// xoshiro256** by Blackman & Vigna (public domain). Chosen over
// std::mt19937_64 for its 32-byte state: each particle slot carries its own
// stream, and ensembles can hold 10^5..10^6 slots.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed = 1) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    // splitmix64 expansion of the seed into the four state words.
    std::uint64_t x = seed;
    for (auto& word : state_) {
      x += 0x9E3779B97F4A7C15ull;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }
  std::uint64_t state_[4];
};

// Substream tags. Keeping the streams for particle slots, resampling,
// parameter initialization, data generation and band sampling disjoint makes
// runs reproducible bit-for-bit for a fixed seed, independent of thread
// count, and lets the fixed-theta and joint filters share slot streams.
enum class StreamTag : std::uint64_t {
  resampling = 1,
  particle_slot = 2,
  param_init = 3,
  observation_noise = 4,
  predictive_band = 5,
  search_cell = 6,
  rate_check = 7,
};

inline std::uint64_t derive_stream_seed(std::uint64_t seed, StreamTag tag,
                                        std::uint64_t index) {
  // One splitmix64 round per mixed-in word.
  auto mix = [](std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  std::uint64_t s = mix(seed + 0x9E3779B97F4A7C15ull);
  s = mix(s ^ (static_cast<std::uint64_t>(tag) * 0xD6E8FEB86659FD93ull));
  s = mix(s ^ (index * 0xCA5A826395121157ull));
  return s;
}

inline Xoshiro256 make_substream(std::uint64_t seed, StreamTag tag,
                                 std::uint64_t index = 0) {
  return Xoshiro256(derive_stream_seed(seed, tag, index));
}

// Uniform on (0, 1); never returns 0 so log() stays finite.
inline double uniform01(Xoshiro256& rng) {
  return (static_cast<double>(rng.next() >> 11) + 0.5) * 0x1.0p-53;
}

inline double standard_normal(Xoshiro256& rng) {
  // Marsaglia polar method; the second variate is discarded so the draw
  // count per call depends only on this engine's own stream.
  for (;;) {
    const double u = 2.0 * uniform01(rng) - 1.0;
    const double v = 2.0 * uniform01(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

// Gamma(shape, scale) via Marsaglia & Tsang (2000), with the standard
// boosting step for shape < 1.
inline double sample_gamma(double shape, double scale, Xoshiro256& rng) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw std::invalid_argument("sample_gamma: shape and scale must be > 0");
  }
  double boost = 1.0;
  if (shape < 1.0) {
    boost = std::pow(uniform01(rng), 1.0 / shape);
    shape += 1.0;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01(rng);
    if (u < 1.0 - 0.0331 * (x * x) * (x * x)) {
      return boost * d * v * scale;
    }
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return boost * d * v * scale;
    }
  }
}

}  // namespace deq
