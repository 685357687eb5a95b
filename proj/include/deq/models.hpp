#pragma once

#include <string>
#include <vector>

#include "deq/ode.hpp"

namespace deq {

constexpr double kGravity = 9.81;

// Pendulum as a first-order system, theta = (L):
//   d/dt (y1, y2) = (y2, -(g/L) sin y1).
OdeSystem make_pendulum();

// FitzHugh--Nagumo, theta = (a, b, c):
//   dV/dt = c (V - V^3/3 + R),  dR/dt = -(1/c) (V - a + b R).
OdeSystem make_fitzhugh_nagumo();

// Scalar dx/dt = rate * x with theta = (rate); oracle scaffolding.
OdeSystem make_linear_test();

// Registry keys: "pendulum", "fitzhugh-nagumo", "linear-test".
OdeSystem make_system(const std::string& name);
std::vector<std::string> system_names();

StateVector pendulum_field(const StateVector& x, const ParamVector& theta);
StateVector fn_field(const StateVector& x, const ParamVector& theta);

}  // namespace deq
