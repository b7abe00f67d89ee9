#include "hprobe/core/least_squares.hpp"

#include <cmath>

namespace hprobe::lsq {

Result levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd p, const Options& opts) {
  const Eigen::Index n = p.size();
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  fn(p, r, jac);
  double cost = r.squaredNorm();
  double lambda = opts.initial_damping;

  Result res;
  for (int it = 0; it < opts.max_iterations; ++it) {
    res.iterations = it + 1;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    bool accepted = false;
    double step_norm = 0.0;
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index i = 0; i < n; ++i) a(i, i) += lambda * std::max(jtj(i, i), 1e-300);
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      const Eigen::VectorXd trial = p + step;
      Eigen::VectorXd r_trial;
      Eigen::MatrixXd jac_trial;
      fn(trial, r_trial, jac_trial);
      const double cost_trial = r_trial.squaredNorm();
      if (std::isfinite(cost_trial) && cost_trial <= cost) {
        step_norm = step.norm() / (p.norm() + 1e-300);
        const double drop = (cost - cost_trial) / (cost + 1e-300);
        p = trial;
        r = std::move(r_trial);
        jac = std::move(jac_trial);
        cost = cost_trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (drop < opts.relative_tolerance && step_norm < std::sqrt(opts.relative_tolerance)) {
          res.converged = true;
        }
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) {
      // no downhill step at any damping: at a (numerical) minimum
      res.converged = true;
    }
    if (res.converged || cost == 0.0) {
      res.converged = true;
      break;
    }
  }

  res.params = p;
  const Eigen::Index m = r.size();
  res.rms_residual = m > 0 ? std::sqrt(cost / static_cast<double>(m)) : 0.0;
  const double dof = static_cast<double>(std::max<Eigen::Index>(m - n, 1));
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  res.covariance = (cost / dof) * jtj.completeOrthogonalDecomposition().pseudoInverse();
  return res;
}

}  // namespace hprobe::lsq
