#include "deq/ode.hpp"

#include <cmath>
#include <sstream>

namespace deq {

namespace {

void check_finite(const StateVector& v, const char* where, double t) {
  for (Eigen::Index c = 0; c < v.size(); ++c) {
    if (!std::isfinite(v[c])) {
      std::ostringstream msg;
      msg << where << ": non-finite value in component " << c << " near t=" << t;
      throw integration_error(msg.str());
    }
  }
}

}  // namespace

SolverGrid::SolverGrid(double initial_time, double h,
                       std::vector<double> observation_times)
    : initial_time_(initial_time), h_(h), times_(std::move(observation_times)) {
  if (!(h > 0.0)) {
    throw config_error("SolverGrid: step size h must be positive");
  }
  if (times_.empty()) {
    throw config_error("SolverGrid: at least one observation time required");
  }
  for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
    if (!(times_[i] < times_[i + 1])) {
      throw config_error("SolverGrid: observation times must be strictly increasing");
    }
  }
  if (times_.front() < initial_time_) {
    throw config_error("SolverGrid: first observation precedes the initial time");
  }

  auto steps_in = [&](double span, const char* what) {
    const double ratio = span / h;
    const long rounded = std::lround(ratio);
    const double rebuilt = static_cast<double>(rounded) * h;
    const double tol = 1e-9 * std::max({1.0, std::abs(span), std::abs(h)});
    if (rounded < 0 || std::abs(rebuilt - span) > tol) {
      std::ostringstream msg;
      msg << "SolverGrid: " << what << " (" << span
          << ") is not an integer multiple of h=" << h;
      throw config_error(msg.str());
    }
    return static_cast<int>(rounded);
  };

  warmup_steps_ = steps_in(times_.front() - initial_time_,
                           "gap from initial time to first observation");
  if (times_.size() == 1) {
    steps_per_interval_ = 0;
    return;
  }
  steps_per_interval_ = steps_in(times_[1] - times_[0], "observation interval");
  if (steps_per_interval_ < 1) {
    throw config_error("SolverGrid: observation interval shorter than one step");
  }
  for (std::size_t i = 1; i + 1 < times_.size(); ++i) {
    const int k_i = steps_in(times_[i + 1] - times_[i], "observation interval");
    if (k_i != steps_per_interval_) {
      throw config_error("SolverGrid: observation intervals are not uniform");
    }
  }
}

StateVector euler_step(const StateVector& x, const ParamVector& theta,
                       double h, const OdeSystem& sys) {
  StateVector fx(sys.dimension);
  sys.vector_field(x, theta, fx);
  check_finite(fx, "euler_step", 0.0);
  return x + h * fx;
}

StateVector runge_step(const StateVector& x, const ParamVector& theta,
                       double h, const OdeSystem& sys) {
  StateVector f1(sys.dimension);
  StateVector f2(sys.dimension);
  sys.vector_field(x, theta, f1);
  check_finite(f1, "runge_step", 0.0);
  sys.vector_field(x + h * f1, theta, f2);
  check_finite(f2, "runge_step", 0.0);
  return x + 0.5 * h * (f1 + f2);
}

void euler_step_with_error(StateVector& x, SigmaVector& abs_error,
                           const ParamVector& theta, double h,
                           const OdeSystem& sys, StepWorkspace& ws) {
  sys.vector_field(x, theta, ws.f1);
  check_finite(ws.f1, "euler_step_with_error", 0.0);
  ws.next = x + h * ws.f1;
  sys.vector_field(ws.next, theta, ws.f2);
  check_finite(ws.f2, "euler_step_with_error", 0.0);
  // euler - runge = next - (x + (h/2)(f1 + f2))
  abs_error = (ws.next - (x + 0.5 * h * (ws.f1 + ws.f2))).cwiseAbs();
  x.swap(ws.next);
}

LocalErrorEstimate estimate_local_error(const StateVector& x,
                                        const ParamVector& theta, double h,
                                        const OdeSystem& sys) {
  // Shares the f(x) evaluation between the two steps so the identity
  // value == euler_step(x) - runge_step(x) holds exactly.
  StateVector f1(sys.dimension);
  StateVector f2(sys.dimension);
  sys.vector_field(x, theta, f1);
  check_finite(f1, "estimate_local_error", 0.0);
  StateVector euler = x + h * f1;
  sys.vector_field(euler, theta, f2);
  check_finite(f2, "estimate_local_error", 0.0);
  LocalErrorEstimate est;
  est.value = euler - (x + 0.5 * h * (f1 + f2));
  est.componentwise_abs = est.value.cwiseAbs();
  return est;
}

std::pair<StateVector, std::vector<LocalErrorEstimate>> integrate_interval(
    const StateVector& x, const ParamVector& theta, const SolverGrid& grid,
    int interval_index, const OdeSystem& sys) {
  if (interval_index < 0 || interval_index >= grid.num_intervals()) {
    throw config_error("integrate_interval: interval index out of range");
  }
  const double t_start = grid.observation_times()[interval_index];
  StateVector state = x;
  StepWorkspace ws;
  ws.resize(sys.dimension);
  std::vector<LocalErrorEstimate> estimates(grid.steps_per_interval());
  for (int j = 0; j < grid.steps_per_interval(); ++j) {
    try {
      auto& est = estimates[static_cast<std::size_t>(j)];
      est.componentwise_abs.resize(sys.dimension);
      euler_step_with_error(state, est.componentwise_abs, theta, grid.h(), sys, ws);
      // After the swap, `state` holds the Euler step and `ws.next` the
      // pre-step state.
      est.value = state - (ws.next + 0.5 * grid.h() * (ws.f1 + ws.f2));
    } catch (const integration_error& e) {
      std::ostringstream msg;
      msg << e.what() << " (interval " << interval_index << ", step " << j
          << ", t=" << t_start + j * grid.h() << ")";
      throw integration_error(msg.str());
    }
  }
  return {std::move(state), std::move(estimates)};
}

StateVector euler_advance(const StateVector& x, const ParamVector& theta,
                          double h, int n_steps, const OdeSystem& sys) {
  StateVector state = x;
  StateVector fx(sys.dimension);
  for (int j = 0; j < n_steps; ++j) {
    sys.vector_field(state, theta, fx);
    check_finite(fx, "euler_advance", j * h);
    state += h * fx;
  }
  return state;
}

std::vector<StateVector> reference_solution(const StateVector& x0,
                                            const ParamVector& theta,
                                            double initial_time,
                                            const std::vector<double>& times,
                                            const OdeSystem& sys,
                                            double h_ref) {
  if (!(h_ref > 0.0)) {
    throw config_error("reference_solution: h_ref must be positive");
  }
  const int d = sys.dimension;
  StateVector k1(d), k2(d), k3(d), k4(d), stage(d);
  auto rk4 = [&](StateVector& x, double h) {
    sys.vector_field(x, theta, k1);
    stage = x + 0.5 * h * k1;
    sys.vector_field(stage, theta, k2);
    stage = x + 0.5 * h * k2;
    sys.vector_field(stage, theta, k3);
    stage = x + h * k3;
    sys.vector_field(stage, theta, k4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };

  std::vector<StateVector> out;
  out.reserve(times.size());
  StateVector state = x0;
  double t = initial_time;
  for (double target : times) {
    if (target < t - 1e-12 * std::max(1.0, std::abs(t))) {
      throw config_error("reference_solution: times must be sorted and >= initial time");
    }
    while (target - t > 1e-12 * std::max(1.0, std::abs(target))) {
      const double step = std::min(h_ref, target - t);
      rk4(state, step);
      check_finite(state, "reference_solution", t);
      t += step;
    }
    t = target;
    out.push_back(state);
  }
  return out;
}

}  // namespace deq
