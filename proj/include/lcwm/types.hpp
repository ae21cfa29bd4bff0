#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace lcwm {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a covariance stays non positive definite after the jitter ladder,
/// or when a density evaluation produces NaN.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

} // namespace lcwm
