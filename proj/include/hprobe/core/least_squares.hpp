#pragma once

#include <Eigen/Dense>
#include <functional>

namespace hprobe::lsq {

// Residual vector and Jacobian (rows = residuals, cols = parameters) at p.
using ResidualFn = std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac)>;

struct Options {
  int max_iterations = 200;
  double relative_tolerance = 1e-10;
  double initial_damping = 1e-3;
};

struct Result {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  // s^2 (J^T J)^-1, s^2 = SSR / (m - n)
  double rms_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Levenberg-Marquardt with Marquardt diagonal scaling.
Result levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd p0, const Options& opts = {});

}  // namespace hprobe::lsq
