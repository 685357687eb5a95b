#include "deq/models.hpp"

#include <cmath>

namespace deq {

namespace {

void pendulum_field_inplace(const StateVector& x, const ParamVector& theta,
                            StateVector& out) {
  const double length = theta[0];
  if (!(length > 0.0)) {
    throw model_error("pendulum: length L must be positive");
  }
  out[0] = x[1];
  out[1] = -(kGravity / length) * std::sin(x[0]);
}

void fn_field_inplace(const StateVector& x, const ParamVector& theta,
                      StateVector& out) {
  const double a = theta[0];
  const double b = theta[1];
  const double c = theta[2];
  if (c == 0.0) {
    throw model_error("fitzhugh-nagumo: parameter c must be nonzero");
  }
  const double v = x[0];
  const double r = x[1];
  out[0] = c * (v - v * v * v / 3.0 + r);
  out[1] = -(1.0 / c) * (v - a + b * r);
}

}  // namespace

StateVector pendulum_field(const StateVector& x, const ParamVector& theta) {
  StateVector out(2);
  pendulum_field_inplace(x, theta, out);
  return out;
}

StateVector fn_field(const StateVector& x, const ParamVector& theta) {
  StateVector out(2);
  fn_field_inplace(x, theta, out);
  return out;
}

OdeSystem make_pendulum() {
  return OdeSystem{"pendulum", 2, 1, &pendulum_field_inplace};
}

OdeSystem make_fitzhugh_nagumo() {
  return OdeSystem{"fitzhugh-nagumo", 2, 3, &fn_field_inplace};
}

OdeSystem make_linear_test() {
  return OdeSystem{"linear-test", 1, 1,
                   [](const StateVector& x, const ParamVector& theta,
                      StateVector& out) { out[0] = theta[0] * x[0]; }};
}

OdeSystem make_system(const std::string& name) {
  if (name == "pendulum") return make_pendulum();
  if (name == "fitzhugh-nagumo") return make_fitzhugh_nagumo();
  if (name == "linear-test") return make_linear_test();
  throw config_error("unknown system '" + name + "'");
}

std::vector<std::string> system_names() {
  return {"pendulum", "fitzhugh-nagumo", "linear-test"};
}

}  // namespace deq
