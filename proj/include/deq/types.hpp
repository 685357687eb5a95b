#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace deq {

// ODE state x in R^{d_X}.
using StateVector = Eigen::VectorXd;
// ODE parameter theta in R^d.
using ParamVector = Eigen::VectorXd;
// Componentwise error standard deviations, all entries >= 0.
using SigmaVector = Eigen::VectorXd;

// Exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Exit code 3. Raised when a vector field or solver step produces a
// non-finite value.
class integration_error : public std::runtime_error {
 public:
  explicit integration_error(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Exit code 3. All particle weights underflowed to zero.
class filter_collapse_error : public std::runtime_error {
 public:
  filter_collapse_error(const std::string& msg, int time_index)
      : std::runtime_error(msg), time_index(time_index) {}
  int time_index;
};

// Exit code 4.
class search_error : public std::runtime_error {
 public:
  explicit search_error(const std::string& msg) : std::runtime_error(msg) {}
};

class model_error : public std::runtime_error {
 public:
  explicit model_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace deq
