// Times the OpenMP particle kernels against the serial reference path on
// the pendulum error-quantification setup and checks that both produce the
// same log marginal likelihood bit-for-bit.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "deq/joint_filter.hpp"
#include "deq/models.hpp"
#include "deq/parallel.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  const int particles = argc > 1 ? std::atoi(argv[1]) : 20000;
  const int max_threads = argc > 2 ? std::atoi(argv[2]) : deq::hardware_threads();

  const deq::OdeSystem sys = deq::make_pendulum();
  deq::StateVector x0(2);
  x0 << 1.0, 0.0;
  deq::ParamVector theta(1);
  theta << 3.0;

  std::vector<double> times;
  for (int t = 1; t <= 40; ++t) times.push_back(static_cast<double>(t));
  const deq::SolverGrid grid(0.0, 0.05, times);
  const deq::ObservationOperator op(3.0 * Eigen::MatrixXd::Identity(2, 2),
                                    Eigen::MatrixXd::Identity(2, 2));
  deq::Xoshiro256 noise = deq::make_substream(7, deq::StreamTag::observation_noise);
  const deq::ObservationSet obs =
      deq::generate_observations(x0, theta, op, grid, sys, 0.0005, noise);

  const deq::GammaMultiplierPrior prior(335.0, 0.003);
  const deq::InitialSigmaPrior init = deq::InitialSigmaPrior::zero();

  deq::ParamPrior param_prior;
  param_prior.marginals.push_back(deq::ParamMarginal::normal("L", 3.0, 2.0));

  auto run_once = [&](int threads, bool joint) {
    deq::FilterConfig config;
    config.particles = particles;
    config.seed = 7;
    config.threads = threads;
    const auto start = Clock::now();
    double logml;
    if (joint) {
      logml = deq::run_joint_filter(sys, x0, obs, grid, prior, init, param_prior,
                                    op, config)
                  .log_marginal;
    } else {
      logml = deq::run_filter(sys, theta, x0, obs, grid, prior, init, op, config)
                  .log_marginal;
    }
    return std::pair<double, double>{seconds_since(start), logml};
  };

  std::printf("pendulum benchmark, K=%d, N=40, k=20\n", particles);
  for (bool joint : {false, true}) {
    const auto [serial_time, serial_logml] = run_once(1, joint);
    const auto [parallel_time, parallel_logml] = run_once(max_threads, joint);
    std::printf("%-12s serial %.3fs | %d threads %.3fs | speedup %.2fx | %s\n",
                joint ? "joint" : "fixed-theta", serial_time, max_threads,
                parallel_time, serial_time / parallel_time,
                serial_logml == parallel_logml ? "bit-identical"
                                               : "MISMATCH");
    if (serial_logml != parallel_logml) return 1;
  }
  return 0;
}
