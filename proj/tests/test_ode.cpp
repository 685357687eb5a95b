#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "deq/models.hpp"
#include "deq/ode.hpp"

using namespace deq;

namespace {

StateVector scalar(double v) {
  StateVector x(1);
  x[0] = v;
  return x;
}

OdeSystem zero_field_2d() {
  return OdeSystem{"zero", 2, 0,
                   [](const StateVector&, const ParamVector&, StateVector& out) {
                     out.setZero();
                   }};
}

OdeSystem constant_field(double c) {
  return OdeSystem{"const", 1, 0,
                   [c](const StateVector&, const ParamVector&, StateVector& out) {
                     out[0] = c;
                   }};
}

}  // namespace

TEST_CASE("euler step on a zero field leaves the state unchanged") {
  StateVector x(2);
  x << 1.0, 2.0;
  const auto next = euler_step(x, ParamVector(), 0.05, zero_field_2d());
  CHECK(next[0] == 1.0);
  CHECK(next[1] == 2.0);
}

TEST_CASE("euler step on the pendulum") {
  ParamVector theta(1);
  theta << 3.0;
  StateVector x(2);
  x << 1.0, 0.0;
  const auto next = euler_step(x, theta, 0.05, make_pendulum());
  CHECK(next[0] == doctest::Approx(1.0).epsilon(1e-15));
  // -(9.81/3) sin(1) * 0.05
  CHECK(next[1] == doctest::Approx(-0.13758050601609108).epsilon(1e-13));
}

TEST_CASE("euler step on scalar f(x)=x") {
  ParamVector rate(1);
  rate << 1.0;
  const auto next = euler_step(scalar(1.0), rate, 0.1, make_linear_test());
  CHECK(next[0] == doctest::Approx(1.1).epsilon(1e-15));
}

TEST_CASE("runge step examples") {
  SUBCASE("zero field") {
    OdeSystem zero{"zero", 1, 0,
                   [](const StateVector&, const ParamVector&, StateVector& out) {
                     out.setZero();
                   }};
    CHECK(runge_step(scalar(3.0), ParamVector(), 0.3, zero)[0] == 3.0);
  }
  SUBCASE("scalar f(x)=x gives the trapezoid value") {
    ParamVector rate(1);
    rate << 1.0;
    const auto next = runge_step(scalar(1.0), rate, 0.1, make_linear_test());
    CHECK(next[0] == doctest::Approx(1.105).epsilon(1e-15));
  }
  SUBCASE("constant field matches Euler exactly") {
    const auto sys = constant_field(2.5);
    const auto e = euler_step(scalar(1.0), ParamVector(), 0.2, sys);
    const auto r = runge_step(scalar(1.0), ParamVector(), 0.2, sys);
    CHECK(e[0] == r[0]);
  }
}

TEST_CASE("local error estimate equals euler minus runge") {
  ParamVector rate(1);
  rate << 1.0;
  const auto sys = make_linear_test();

  SUBCASE("scalar f(x)=x") {
    const auto est = estimate_local_error(scalar(1.0), rate, 0.1, sys);
    CHECK(est.value[0] == doctest::Approx(-0.005).epsilon(1e-13));
    CHECK(est.componentwise_abs[0] == doctest::Approx(0.005).epsilon(1e-13));
  }
  SUBCASE("identity against the two step operations") {
    for (double x0 : {0.3, 1.0, -2.0}) {
      const auto est = estimate_local_error(scalar(x0), rate, 0.05, sys);
      const StateVector diff = euler_step(scalar(x0), rate, 0.05, sys) -
                               runge_step(scalar(x0), rate, 0.05, sys);
      CHECK(est.value[0] == diff[0]);
      CHECK(est.componentwise_abs[0] == std::abs(diff[0]));
    }
  }
  SUBCASE("constant field has zero estimate") {
    const auto est =
        estimate_local_error(scalar(1.0), ParamVector(), 0.1, constant_field(4.0));
    CHECK(est.componentwise_abs[0] == 0.0);
  }
}

TEST_CASE("integrate_interval composes euler steps and collects estimates") {
  ParamVector rate(1);
  rate << 1.0;
  const auto sys = make_linear_test();

  SUBCASE("k=1 equals a single step") {
    SolverGrid grid(0.0, 0.1, {0.0, 0.1});
    auto [x, est] = integrate_interval(scalar(1.0), rate, grid, 0, sys);
    CHECK(x[0] == euler_step(scalar(1.0), rate, 0.1, sys)[0]);
    REQUIRE(est.size() == 1);
    CHECK(est[0].componentwise_abs[0] == doctest::Approx(0.005).epsilon(1e-13));
  }
  SUBCASE("k=2 repeats the arithmetic at 1 then 1.1") {
    SolverGrid grid(0.0, 0.1, {0.0, 0.2});
    auto [x, est] = integrate_interval(scalar(1.0), rate, grid, 0, sys);
    CHECK(x[0] == doctest::Approx(1.21).epsilon(1e-15));
    REQUIRE(est.size() == 2);
    CHECK(est[0].componentwise_abs[0] == doctest::Approx(0.005).epsilon(1e-13));
    CHECK(est[1].componentwise_abs[0] == doctest::Approx(0.0055).epsilon(1e-13));
  }
  SUBCASE("zero field leaves state and estimates zero") {
    SolverGrid grid(0.0, 0.25, {0.0, 1.0});
    StateVector x0(2);
    x0 << 4.0, -1.0;
    auto [x, est] = integrate_interval(x0, ParamVector(), grid, 0, zero_field_2d());
    CHECK(x[0] == 4.0);
    CHECK(x[1] == -1.0);
    for (const auto& e : est) CHECK(e.componentwise_abs.norm() == 0.0);
  }
  SUBCASE("stepping is associative across interval splits") {
    SolverGrid one(0.0, 0.1, {0.0, 0.6});
    SolverGrid two(0.0, 0.1, {0.0, 0.3, 0.6});
    auto [x_one, est_one] = integrate_interval(scalar(1.0), rate, one, 0, sys);
    auto [x_mid, est_a] = integrate_interval(scalar(1.0), rate, two, 0, sys);
    auto [x_two, est_b] = integrate_interval(x_mid, rate, two, 1, sys);
    CHECK(x_one[0] == x_two[0]);
    REQUIRE(est_one.size() == est_a.size() + est_b.size());
    for (std::size_t j = 0; j < est_a.size(); ++j) {
      CHECK(est_one[j].value[0] == est_a[j].value[0]);
    }
    for (std::size_t j = 0; j < est_b.size(); ++j) {
      CHECK(est_one[est_a.size() + j].value[0] == est_b[j].value[0]);
    }
  }
}

TEST_CASE("integration failure identifies the failing step") {
  OdeSystem blowup{"blowup", 1, 0,
                   [](const StateVector& x, const ParamVector&, StateVector& out) {
                     out[0] = x[0] > 2.0 ? std::numeric_limits<double>::infinity()
                                         : x[0] * x[0] + 1.0;
                   }};
  SolverGrid grid(0.0, 0.5, {0.0, 4.0});
  CHECK_THROWS_AS(integrate_interval(scalar(1.0), ParamVector(), grid, 0, blowup),
                  integration_error);
}

TEST_CASE("reference solution hits closed forms") {
  SUBCASE("zero field repeats x0") {
    StateVector x0(2);
    x0 << 2.0, 3.0;
    const auto ref = reference_solution(x0, ParamVector(), 0.0,
                                        {0.0, 0.5, 1.5}, zero_field_2d(), 0.01);
    for (const auto& x : ref) {
      CHECK(x[0] == 2.0);
      CHECK(x[1] == 3.0);
    }
  }
  SUBCASE("exponential growth") {
    ParamVector rate(1);
    rate << 1.0;
    const auto ref =
        reference_solution(scalar(1.0), rate, 0.0, {1.0}, make_linear_test(), 1e-3);
    CHECK(ref[0][0] == doctest::Approx(std::exp(1.0)).epsilon(1e-8));
  }
  SUBCASE("pendulum small-angle limit is a harmonic oscillator") {
    ParamVector theta(1);
    theta << 2.0;
    StateVector x0(2);
    x0 << 0.01, 0.0;
    const double omega = std::sqrt(kGravity / 2.0);
    std::vector<double> times = {0.5, 1.0, 2.0};
    const auto ref =
        reference_solution(x0, theta, 0.0, times, make_pendulum(), 1e-3);
    for (std::size_t i = 0; i < times.size(); ++i) {
      CHECK(ref[i][0] ==
            doctest::Approx(0.01 * std::cos(omega * times[i])).epsilon(1e-3));
    }
  }
}

TEST_CASE("solver order check via log-log regression") {
  // Global error over [0,1] for dx/dt = x; slopes fitted on
  // h in {0.1, 0.05, 0.025, 0.0125}.
  ParamVector rate(1);
  rate << 1.0;
  const auto sys = make_linear_test();
  auto global_error = [&](double h, bool use_runge) {
    StateVector x = scalar(1.0);
    const int n = static_cast<int>(std::lround(1.0 / h));
    for (int i = 0; i < n; ++i) {
      x = use_runge ? runge_step(x, rate, h, sys) : euler_step(x, rate, h, sys);
    }
    return std::abs(x[0] - std::exp(1.0));
  };
  auto slope_for = [&](bool use_runge) {
    const double hs[] = {0.1, 0.05, 0.025, 0.0125};
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double h : hs) {
      const double lx = std::log(h);
      const double ly = std::log(global_error(h, use_runge));
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    const double n = 4.0;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };
  CHECK(slope_for(false) == doctest::Approx(1.0).epsilon(0.15));
  CHECK(slope_for(true) == doctest::Approx(2.0).epsilon(0.075));
}

TEST_CASE("solver grid invariants") {
  SUBCASE("uniform grid accepted, k computed") {
    SolverGrid grid(0.0, 0.05, {1.0, 2.0, 3.0});
    CHECK(grid.steps_per_interval() == 20);
    CHECK(grid.warmup_steps() == 20);
  }
  SUBCASE("non-divisible interval rejected") {
    CHECK_THROWS_AS(SolverGrid(0.0, 0.3, {0.0, 1.0}), config_error);
  }
  SUBCASE("non-divisible warmup rejected") {
    CHECK_THROWS_AS(SolverGrid(0.0, 0.5, {1.2, 1.7}), config_error);
  }
  SUBCASE("non-increasing times rejected") {
    CHECK_THROWS_AS(SolverGrid(0.0, 0.1, {1.0, 1.0}), config_error);
  }
  SUBCASE("non-uniform spacing rejected") {
    CHECK_THROWS_AS(SolverGrid(0.0, 0.1, {0.0, 0.1, 0.3}), config_error);
  }
  SUBCASE("single observation allowed") {
    SolverGrid grid(0.0, 0.1, {0.5});
    CHECK(grid.num_intervals() == 0);
    CHECK(grid.warmup_steps() == 5);
  }
}
