#pragma once

#include <string>
#include <vector>

#include "deq/ode.hpp"
#include "deq/rng.hpp"
#include "deq/types.hpp"

namespace deq {

// Linear observation process y = H x + eps, eps ~ N(0, Gamma).
struct ObservationOperator {
  Eigen::MatrixXd H;      // d_Y x d_X, full rank
  Eigen::MatrixXd Gamma;  // d_Y x d_Y, symmetric positive definite

  ObservationOperator(Eigen::MatrixXd H, Eigen::MatrixXd Gamma);

  int obs_dim() const { return static_cast<int>(H.rows()); }
  int state_dim() const { return static_cast<int>(H.cols()); }
};

struct ObservationSet {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;
};

// Gamma + H diag(sigma^2) H^T. Symmetric positive definite by construction.
Eigen::MatrixXd effective_covariance(const SigmaVector& sigma,
                                     const ObservationOperator& op);

// Log density of y under N(H x_num, Gamma + H diag(sigma^2) H^T),
// evaluated through a Cholesky factorization.
double log_likelihood(const Eigen::VectorXd& y, const StateVector& x_num,
                      const SigmaVector& sigma, const ObservationOperator& op);

// y*_{t_i} = H x_ref(t_i) + eps_i with the reference solution as truth.
ObservationSet generate_observations(const StateVector& x0,
                                     const ParamVector& theta,
                                     const ObservationOperator& op,
                                     const SolverGrid& grid,
                                     const OdeSystem& sys, double h_ref,
                                     Xoshiro256& rng);

// Exact discretization errors r_{t_i} = x_ref(t_i) - x_euler(t_i) at the
// observation times.
std::vector<StateVector> exact_errors(const ParamVector& theta,
                                      const StateVector& x0,
                                      const SolverGrid& grid,
                                      const OdeSystem& sys, double h_ref);

// CSV with header t,y1,...,yd; one row per observation time.
void write_observations_csv(const ObservationSet& obs, const std::string& path);
ObservationSet read_observations_csv(const std::string& path);

}  // namespace deq
