#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "deq/types.hpp"

namespace deq {

// Autonomous ODE dx/dt = f(x, theta). The field writes into `out` so the
// per-particle solver loops run without heap allocation.
struct OdeSystem {
  std::string name;
  int dimension = 0;        // d_X
  int param_dimension = 0;  // d
  std::function<void(const StateVector&, const ParamVector&, StateVector& out)>
      vector_field;

  StateVector eval(const StateVector& x, const ParamVector& theta) const {
    StateVector out(dimension);
    vector_field(x, theta, out);
    return out;
  }
};

// Uniform solver grid: consecutive observation times are exactly
// steps_per_interval * h apart, and the initial time (where x0 lives) is an
// integer number of steps before the first observation.
class SolverGrid {
 public:
  SolverGrid(double initial_time, double h,
             std::vector<double> observation_times);

  double initial_time() const { return initial_time_; }
  double h() const { return h_; }
  int steps_per_interval() const { return steps_per_interval_; }
  int warmup_steps() const { return warmup_steps_; }
  const std::vector<double>& observation_times() const { return times_; }
  // Number of observation intervals (N in t_0 < ... < t_N).
  int num_intervals() const { return static_cast<int>(times_.size()) - 1; }

 private:
  double initial_time_;
  double h_;
  int steps_per_interval_;
  int warmup_steps_;
  std::vector<double> times_;
};

struct LocalErrorEstimate {
  StateVector value;             // Euler step minus Runge step
  SigmaVector componentwise_abs; // |value|, componentwise
};

// One explicit Euler step x + h f(x, theta).
StateVector euler_step(const StateVector& x, const ParamVector& theta,
                       double h, const OdeSystem& sys);

// One explicit trapezoidal (Heun) step
// x + (h/2) (f(x) + f(x + h f(x))).
StateVector runge_step(const StateVector& x, const ParamVector& theta,
                       double h, const OdeSystem& sys);

// Local error proxy: Euler step minus Runge step at the same state.
LocalErrorEstimate estimate_local_error(const StateVector& x,
                                        const ParamVector& theta, double h,
                                        const OdeSystem& sys);

// Advances one observation interval t_i -> t_{i+1} with steps_per_interval
// Euler steps; each local-error estimate is evaluated at the pre-step state
// of the Euler trajectory.
std::pair<StateVector, std::vector<LocalErrorEstimate>> integrate_interval(
    const StateVector& x, const ParamVector& theta, const SolverGrid& grid,
    int interval_index, const OdeSystem& sys);

// Plain Euler advance over n steps (no error estimates); used for the
// pre-observation warmup segment.
StateVector euler_advance(const StateVector& x, const ParamVector& theta,
                          double h, int n_steps, const OdeSystem& sys);

// Preallocated scratch for the allocation-free stepping loops.
struct StepWorkspace {
  StateVector f1;
  StateVector f2;
  StateVector next;

  void resize(int dim) {
    f1.resize(dim);
    f2.resize(dim);
    next.resize(dim);
  }
};

// One fine step of the shared Euler/Runge pair: advances x by an Euler step
// and writes |euler - runge| into abs_error. Identical arithmetic to
// estimate_local_error followed by euler_step.
void euler_step_with_error(StateVector& x, SigmaVector& abs_error,
                           const ParamVector& theta, double h,
                           const OdeSystem& sys, StepWorkspace& ws);

// Classical 4th-order one-step method evaluated at the requested times,
// starting from x0 at initial_time. Internal step h_ref.
std::vector<StateVector> reference_solution(const StateVector& x0,
                                            const ParamVector& theta,
                                            double initial_time,
                                            const std::vector<double>& times,
                                            const OdeSystem& sys,
                                            double h_ref);

}  // namespace deq
