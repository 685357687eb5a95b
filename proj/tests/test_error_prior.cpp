#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "deq/error_prior.hpp"
#include "deq/models.hpp"

using namespace deq;

namespace {

SigmaVector sig(std::initializer_list<double> vals) {
  SigmaVector v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

std::vector<LocalErrorEstimate> abs_schedule(
    std::initializer_list<std::initializer_list<double>> steps) {
  std::vector<LocalErrorEstimate> out;
  for (const auto& s : steps) {
    LocalErrorEstimate est;
    est.componentwise_abs = sig(s);
    est.value = -est.componentwise_abs;
    out.push_back(est);
  }
  return out;
}

}  // namespace

TEST_CASE("gamma multiplier prior validation and moments") {
  CHECK_THROWS_AS(GammaMultiplierPrior(0.0, 1.0), config_error);
  CHECK_THROWS_AS(GammaMultiplierPrior(1.0, 0.0), config_error);
  const GammaMultiplierPrior prior(335.0, 0.003);
  CHECK(prior.mean() == doctest::Approx(1.005));
  CHECK(prior.variance() == doctest::Approx(335.0 * 0.003 * 0.003));
}

TEST_CASE("transition_sigma arithmetic") {
  CHECK(transition_sigma(sig({0.0}), 2.0, sig({0.0}))[0] == 0.0);

  const auto r = transition_sigma(sig({1.0, 1.0}), 1.0, sig({0.005, 0.01}));
  CHECK(r[0] == doctest::Approx(1.005).epsilon(1e-15));
  CHECK(r[1] == doctest::Approx(1.01).epsilon(1e-15));

  CHECK(transition_sigma(sig({2.0}), 0.5, sig({0.1}))[0] ==
        doctest::Approx(1.1).epsilon(1e-15));

  CHECK_THROWS_AS(transition_sigma(sig({1.0, 2.0}), 1.0, sig({0.1})),
                  config_error);
}

TEST_CASE("transition closure properties") {
  Xoshiro256 rng(21);
  const GammaMultiplierPrior prior(2.0, 0.8);
  SigmaVector small = sig({0.1, 0.0, 3.0});
  SigmaVector large = sig({0.2, 1.0, 3.0});
  for (int i = 0; i < 2000; ++i) {
    const double m = sample_multiplier(prior, rng);
    SigmaVector abs_err(3);
    for (int c = 0; c < 3; ++c) abs_err[c] = uniform01(rng) * 0.05;
    small = transition_sigma(small, m, abs_err);
    large = transition_sigma(large, m, abs_err);
    // nonnegativity closure
    CHECK((small.array() >= 0.0).all());
    // monotone dominance under the same draw
    CHECK((small.array() <= large.array() + 1e-15).all());
  }
}

TEST_CASE("propagate_interval") {
  const GammaMultiplierPrior prior(4.0, 0.25);

  SUBCASE("k=1 equals a single transition for the same draw") {
    Xoshiro256 rng_a = make_substream(5, StreamTag::particle_slot, 0);
    Xoshiro256 rng_b = make_substream(5, StreamTag::particle_slot, 0);
    const auto sched = abs_schedule({{0.02, 0.01}});
    const auto via_interval = propagate_interval(sig({1.0, 2.0}), sched, prior, rng_a);
    const double m = sample_multiplier(prior, rng_b);
    const auto direct = transition_sigma(sig({1.0, 2.0}), m, sched[0].componentwise_abs);
    CHECK(via_interval[0] == direct[0]);
    CHECK(via_interval[1] == direct[1]);
  }

  SUBCASE("zero errors and zero sigma stay zero") {
    Xoshiro256 rng(9);
    const auto sched = abs_schedule({{0.0}, {0.0}, {0.0}});
    const auto out = propagate_interval(sig({0.0}), sched, prior, rng);
    CHECK(out[0] == 0.0);
  }

  SUBCASE("MC mean matches the closed-form expectation recursion") {
    // E[sigma_{j+1}] = (alpha beta) E[sigma_j] + |L_j| with alpha beta = 1.
    const auto sched = abs_schedule({{0.05}, {0.02}, {0.08}, {0.01}});
    double expected = 0.7;
    for (const auto& s : sched) expected = 1.0 * expected + s.componentwise_abs[0];

    Xoshiro256 rng(31);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto out = propagate_interval(sig({0.7}), sched, prior, rng);
      sum += out[0];
      sum_sq += out[0] * out[0];
    }
    const double mc_mean = sum / n;
    const double mc_var = sum_sq / n - mc_mean * mc_mean;
    CHECK(std::abs(mc_mean - expected) < 3.0 * std::sqrt(mc_var / n));
  }

  SUBCASE("in-place variant matches the value-returning one") {
    Xoshiro256 rng_a(77), rng_b(77);
    const auto sched = abs_schedule({{0.01, 0.3}, {0.2, 0.0}});
    SigmaVector inplace = sig({0.4, 1.1});
    propagate_interval_inplace(inplace, sched, prior, rng_a);
    const auto value = propagate_interval(sig({0.4, 1.1}), sched, prior, rng_b);
    CHECK(inplace[0] == value[0]);
    CHECK(inplace[1] == value[1]);
  }
}

TEST_CASE("condition (I) identity for M = m I") {
  // E||I - M||_F^2 = d_X ((1 - alpha beta)^2 + alpha beta^2)
  const double cases[][2] = {{1.0 / 0.01, 0.01}, {50.0, 0.03}, {4.0, 0.2}};
  const int d = 3;
  Xoshiro256 rng(123);
  for (const auto& c : cases) {
    const GammaMultiplierPrior prior(c[0], c[1]);
    const double ab = c[0] * c[1];
    const double closed_form = d * ((1.0 - ab) * (1.0 - ab) + c[0] * c[1] * c[1]);
    const int n = 400000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double m = sample_multiplier(prior, rng);
      const double frob_sq = d * (1.0 - m) * (1.0 - m);
      sum += frob_sq;
      sum_sq += frob_sq * frob_sq;
    }
    const double mc = sum / n;
    const double se = std::sqrt((sum_sq / n - mc * mc) / n);
    CHECK(std::abs(mc - closed_form) < 4.0 * se);
  }
}

TEST_CASE("initial sigma prior modes") {
  Xoshiro256 rng(1);
  CHECK(InitialSigmaPrior::zero().sample(3, 0.1, rng).norm() == 0.0);
  const auto fixed = InitialSigmaPrior::fixed(sig({0.5, 0.25}));
  CHECK(fixed.sample(2, 0.1, rng)[1] == 0.25);
  CHECK_THROWS_AS(fixed.sample(3, 0.1, rng), config_error);
  CHECK_THROWS_AS(InitialSigmaPrior::fixed(sig({-0.1})), config_error);
  const auto scaled = InitialSigmaPrior::scaled(2.0, 0.5);
  CHECK(scaled.sample(2, 0.25, rng)[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("rate check requires at least 3 step sizes") {
  RateCheckSpec spec;
  spec.h_values = {0.1, 0.05};
  ParamVector theta(1);
  theta << 1.0;
  StateVector x0(1);
  x0 << 1.0;
  CHECK_THROWS_AS(rate_check(make_linear_test(), theta, x0, spec, 1), config_error);
}

TEST_CASE("rate check degenerate zero case") {
  OdeSystem zero{"zero", 1, 0,
                 [](const StateVector&, const ParamVector&, StateVector& out) {
                   out.setZero();
                 }};
  RateCheckSpec spec;
  spec.h_values = {0.1, 0.05, 0.025};
  spec.final_time = 1.0;
  spec.mc_samples = 50;
  const auto report = rate_check(zero, ParamVector(), sig({1.0}), spec, 1);
  CHECK(report.degenerate_zero);
  CHECK(std::isnan(report.slope));
}

TEST_CASE("rate check slope on the linear system") {
  ParamVector theta(1);
  theta << 1.0;
  StateVector x0(1);
  x0 << 1.0;
  RateCheckSpec spec;
  spec.h_values = {0.1, 0.05, 0.025, 0.0125};
  spec.final_time = 5.0;
  spec.mc_samples = 400;

  SUBCASE("zero init gives squared-statistic slope 2") {
    const auto report = rate_check(make_linear_test(), theta, x0, spec, 7);
    CHECK(report.expected_slope == 2.0);
    CHECK(report.slope == doctest::Approx(2.0).epsilon(0.15));
  }
  SUBCASE("scaled init with beta 0.5 dominates at slope 1") {
    // c0 large enough that the initial term dominates the accumulated
    // local errors over the whole h range.
    spec.init = InitialSigmaPrior::scaled(20.0, 0.5);
    const auto report = rate_check(make_linear_test(), theta, x0, spec, 7);
    CHECK(report.expected_slope == 1.0);
    CHECK(report.slope == doctest::Approx(1.0).epsilon(0.3));
  }
}
