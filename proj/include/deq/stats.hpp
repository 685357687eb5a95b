#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace deq {

// Empirical quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q outside [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

inline double mean(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean: empty sample");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

// Population standard deviation (divides by n).
inline double stddev_population(const std::vector<double>& values) {
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size()));
}

// Sample standard deviation (divides by n-1).
inline double stddev_sample(const std::vector<double>& values) {
  if (values.size() < 2) throw std::invalid_argument("stddev_sample: need n >= 2");
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size() - 1));
}

inline double standard_error(const std::vector<double>& values) {
  return stddev_sample(values) / std::sqrt(static_cast<double>(values.size()));
}

}  // namespace deq
