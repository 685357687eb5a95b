#include "deq/observation.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <fstream>
#include <sstream>

#include "deq/io.hpp"

namespace deq {

ObservationOperator::ObservationOperator(Eigen::MatrixXd H_in,
                                         Eigen::MatrixXd Gamma_in)
    : H(std::move(H_in)), Gamma(std::move(Gamma_in)) {
  if (H.rows() < 1 || H.cols() < 1) {
    throw config_error("ObservationOperator: H must be nonempty");
  }
  if (Gamma.rows() != H.rows() || Gamma.cols() != H.rows()) {
    throw config_error("ObservationOperator: Gamma must be d_Y x d_Y");
  }
  if (!Gamma.isApprox(Gamma.transpose(), 1e-12)) {
    throw config_error("ObservationOperator: Gamma must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(Gamma);
  if (llt.info() != Eigen::Success) {
    throw config_error("ObservationOperator: Gamma must be positive definite");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(H);
  if (lu.rank() < std::min(H.rows(), H.cols())) {
    throw config_error("ObservationOperator: H must have full rank");
  }
}

Eigen::MatrixXd effective_covariance(const SigmaVector& sigma,
                                     const ObservationOperator& op) {
  if (sigma.size() != op.H.cols()) {
    throw config_error("effective_covariance: sigma dimension mismatch");
  }
  return op.Gamma +
         op.H * sigma.array().square().matrix().asDiagonal() * op.H.transpose();
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// The density is evaluated once per particle per observation; the fixed
// max-size instantiation keeps the whole evaluation on the stack for the
// small observation dimensions of practice (d_Y = 2 in all presets).
template <class Mat, class Vec>
double gaussian_logpdf(const Eigen::VectorXd& y, const StateVector& x_num,
                       const SigmaVector& sigma, const ObservationOperator& op) {
  const Eigen::Index dy = op.H.rows();
  const Eigen::Index dx = op.H.cols();

  Mat cov(dy, dy);
  for (Eigen::Index i = 0; i < dy; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double s = op.Gamma(i, j);
      for (Eigen::Index c = 0; c < dx; ++c) {
        s += op.H(i, c) * op.H(j, c) * sigma[c] * sigma[c];
      }
      cov(i, j) = s;
      cov(j, i) = s;
    }
  }

  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "log_likelihood: covariance factorization failed, diagonal = [";
    for (Eigen::Index i = 0; i < dy; ++i) {
      msg << (i ? ", " : "") << cov(i, i);
    }
    msg << "]";
    throw model_error(msg.str());
  }

  Vec z(dy);
  z.noalias() = y;
  z.noalias() -= op.H * x_num;
  llt.matrixL().solveInPlace(z);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < dy; ++i) {
    log_det += std::log(llt.matrixL()(i, i));
  }
  return -0.5 * static_cast<double>(dy) * kLog2Pi - log_det - 0.5 * z.squaredNorm();
}

}  // namespace

double log_likelihood(const Eigen::VectorXd& y, const StateVector& x_num,
                      const SigmaVector& sigma, const ObservationOperator& op) {
  if (sigma.size() != op.H.cols()) {
    throw config_error("log_likelihood: sigma dimension mismatch");
  }
  if (op.H.rows() <= 8) {
    using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;
    using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1>;
    return gaussian_logpdf<SmallMat, SmallVec>(y, x_num, sigma, op);
  }
  return gaussian_logpdf<Eigen::MatrixXd, Eigen::VectorXd>(y, x_num, sigma, op);
}

ObservationSet generate_observations(const StateVector& x0,
                                     const ParamVector& theta,
                                     const ObservationOperator& op,
                                     const SolverGrid& grid,
                                     const OdeSystem& sys, double h_ref,
                                     Xoshiro256& rng) {
  const auto ref = reference_solution(x0, theta, grid.initial_time(),
                                      grid.observation_times(), sys, h_ref);
  Eigen::LLT<Eigen::MatrixXd> llt(op.Gamma);
  const Eigen::MatrixXd noise_chol = llt.matrixL();

  ObservationSet obs;
  obs.times = grid.observation_times();
  obs.values.reserve(ref.size());
  for (const auto& x : ref) {
    Eigen::VectorXd eps(op.obs_dim());
    for (Eigen::Index c = 0; c < eps.size(); ++c) {
      eps[c] = standard_normal(rng);
    }
    obs.values.push_back(op.H * x + noise_chol * eps);
  }
  return obs;
}

std::vector<StateVector> exact_errors(const ParamVector& theta,
                                      const StateVector& x0,
                                      const SolverGrid& grid,
                                      const OdeSystem& sys, double h_ref) {
  const auto ref = reference_solution(x0, theta, grid.initial_time(),
                                      grid.observation_times(), sys, h_ref);
  std::vector<StateVector> errors;
  errors.reserve(ref.size());
  StateVector x = euler_advance(x0, theta, grid.h(), grid.warmup_steps(), sys);
  errors.push_back(ref[0] - x);
  for (int i = 0; i < grid.num_intervals(); ++i) {
    auto [next, est] = integrate_interval(x, theta, grid, i, sys);
    x = std::move(next);
    errors.push_back(ref[static_cast<std::size_t>(i) + 1] - x);
  }
  return errors;
}

void write_observations_csv(const ObservationSet& obs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << "t";
  const int d = obs.values.empty() ? 0 : static_cast<int>(obs.values[0].size());
  for (int c = 1; c <= d; ++c) out << ",y" << c;
  out << "\n";
  for (std::size_t i = 0; i < obs.times.size(); ++i) {
    out << format_number(obs.times[i]);
    for (Eigen::Index c = 0; c < obs.values[i].size(); ++c) {
      out << "," << format_number(obs.values[i][c]);
    }
    out << "\n";
  }
}

ObservationSet read_observations_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open observations file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) {
    throw config_error("observations file '" + path + "' is empty");
  }
  ObservationSet obs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < 2) {
      throw config_error("observations file '" + path + "': bad row '" + line + "'");
    }
    obs.times.push_back(parse_number(fields[0]));
    Eigen::VectorXd y(fields.size() - 1);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      y[static_cast<Eigen::Index>(c - 1)] = parse_number(fields[c]);
    }
    obs.values.push_back(std::move(y));
  }
  return obs;
}

}  // namespace deq
