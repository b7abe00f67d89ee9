#include "hprobe/spin/tomography.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "hprobe/core/constants.hpp"
#include "hprobe/core/error.hpp"
#include "hprobe/core/least_squares.hpp"

namespace hprobe::spin {

using constants::deg;

std::vector<double> tomography_model(const mw::AcFieldVector& field, const SpinSystem& spin,
                                     const std::vector<RabiMeasurement>& m) {
  std::vector<double> out;
  for (const auto& r : m) {
    SpinSystem s = spin;
    s.quantization_axis = axis_from_angles(r.static_theta_deg, r.static_phi_deg);
    out.push_back(rabi_frequency(s, field));
  }
  return out;
}

TomographyResult tomography_fit(const std::vector<RabiMeasurement>& m, const SpinSystem& spin, double p_ref,
                                double p_meas) {
  spin.validate();
  if (!(p_ref > 0.0)) throw ValidationError("reference power must be > 0");
  if (p_meas == 0.0) p_meas = p_ref;
  if (!(p_meas > 0.0)) throw ValidationError("measured power must be > 0");
  for (const auto& r : m)
    if (!(r.rabi_hz >= 0.0) || !std::isfinite(r.rabi_hz)) throw ValidationError("Rabi rates must be finite and >= 0");

  std::vector<Eigen::Vector3d> axes;
  Eigen::MatrixXd a(3, static_cast<Eigen::Index>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    axes.push_back(axis_from_angles(m[i].static_theta_deg, m[i].static_phi_deg));
    a.col(static_cast<Eigen::Index>(i)) = axes.back();
  }
  double cond = 0.0;
  if (m.size() >= 3) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    cond = svd.singularValues()(2) / svd.singularValues()(0);
  }
  if (m.size() < 3 || cond < 1e-3) {
    std::ostringstream os;
    os << "tomography needs at least 3 non-coplanar static-field orientations (got " << m.size()
       << ", conditioning " << cond << ")";
    throw NumericalError(os.str());
  }

  const double half_gamma = 0.5 * spin.gyromagnetic_gamma;
  const auto rows = static_cast<Eigen::Index>(m.size());
  auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    const double st = std::sin(p(1)), ct = std::cos(p(1)), sp = std::sin(p(2)), cp = std::cos(p(2));
    const Eigen::Vector3d u(st * cp, st * sp, ct);
    const Eigen::Vector3d du_t(ct * cp, ct * sp, -st);
    const Eigen::Vector3d du_p(-st * sp, st * cp, 0.0);
    r.resize(rows);
    jac.resize(rows, 3);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Eigen::Vector3d& n = axes[static_cast<std::size_t>(i)];
      const Eigen::Vector3d c = u.cross(n);
      const double cn = c.norm();
      r(i) = half_gamma * p(0) * cn - m[static_cast<std::size_t>(i)].rabi_hz;
      jac(i, 0) = half_gamma * cn;
      if (cn > 0.0) {
        jac(i, 1) = half_gamma * p(0) * c.dot(du_t.cross(n)) / cn;
        jac(i, 2) = half_gamma * p(0) * c.dot(du_p.cross(n)) / cn;
      } else {
        jac(i, 1) = jac(i, 2) = 0.0;
      }
    }
  };

  double mean_rate = 0.0;
  for (const auto& r : m) mean_rate += r.rabi_hz / static_cast<double>(m.size());
  const double b0 = mean_rate / (half_gamma * 0.8);

  lsq::Result best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (double t0 : {20.0, 50.0, 80.0, 110.0, 140.0, 170.0}) {
    for (double p0 : {-150.0, -90.0, -30.0, 30.0, 90.0, 150.0}) {
      Eigen::VectorXd start(3);
      start << b0, t0 * deg, p0 * deg;
      const auto res = lsq::levenberg_marquardt(residual, start);
      if (res.rms_residual < best_cost) {
        best_cost = res.rms_residual;
        best = res;
      }
    }
  }
  if (!best.converged) throw NumericalError("tomography least squares did not converge");

  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  residual(best.params, r, jac);
  Eigen::JacobiSVD<Eigen::MatrixXd> js(jac);
  if (js.singularValues()(2) < 1e-9 * js.singularValues()(0))
    throw NumericalError("tomography Jacobian is rank deficient at the optimum");

  const double scale = std::sqrt(p_ref / p_meas);
  const double b = std::abs(best.params(0));
  const Eigen::Vector3d bv = b * scale * axis_from_angles(best.params(1) / deg, best.params(2) / deg) *
                             (best.params(0) < 0.0 ? -1.0 : 1.0);
  TomographyResult out;
  out.field = mw::AcFieldVector::from_cartesian(bv, p_ref, spin.transition_frequency);
  Eigen::Matrix3d units = Eigen::Matrix3d::Zero();
  units(0, 0) = scale;
  units(1, 1) = units(2, 2) = 1.0 / deg;
  out.covariance = units * best.covariance * units;
  out.rms_residual = best.rms_residual;
  out.orientation_condition = cond;
  return out;
}

}  // namespace hprobe::spin
