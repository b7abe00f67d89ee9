#include "hprobe/spin/bloch.hpp"

#include <cmath>
#include <exception>
#include <sstream>

#include "hprobe/core/constants.hpp"
#include "hprobe/core/error.hpp"

namespace hprobe::spin {

using constants::deg;
using constants::pi;

void SpinSystem::validate() const {
  if (!(gyromagnetic_gamma > 0.0)) throw ValidationError("gyromagnetic_gamma must be > 0");
  if (std::abs(quantization_axis.norm() - 1.0) > 1e-12) throw ValidationError("quantization axis must be a unit vector");
  if (!(T1 > 0.0) || !(T2_intrinsic > 0.0)) throw ValidationError("T1 and T2 must be > 0");
}

Eigen::Vector3d axis_from_angles(double theta_deg, double phi_deg) {
  const double t = theta_deg * deg, p = phi_deg * deg;
  return {std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t)};
}

namespace {
double perpendicular(const Eigen::Vector3d& b, const Eigen::Vector3d& n) { return b.cross(n).norm(); }
}  // namespace

double rabi_frequency(const SpinSystem& spin, const mw::AcFieldVector& field) {
  spin.validate();
  return 0.5 * spin.gyromagnetic_gamma * perpendicular(field.cartesian(), spin.quantization_axis);
}

double effective_gamma_for_pi_time(double pi_time, const mw::AcFieldVector& field, const Eigen::Vector3d& axis) {
  if (!(pi_time > 0.0)) throw ValidationError("pi time must be > 0");
  const double bp = perpendicular(field.cartesian(), axis.normalized());
  if (!(bp > 0.0)) throw ValidationError("field has no component transverse to the quantization axis");
  // pi pulse: f_R t = 1/2 with f_R = gamma bp / 2
  return 1.0 / (pi_time * bp);
}

std::vector<double> rabi_trace(const SpinSystem& spin, double rabi_hz, const std::vector<double>& times) {
  spin.validate();
  if (!(rabi_hz > 0.0)) throw ValidationError("Rabi frequency must be > 0");
  std::vector<double> p;
  p.reserve(times.size());
  for (double t : times) {
    const double env = std::isinf(spin.T2_intrinsic) ? 1.0 : std::exp(-t / spin.T2_intrinsic);
    p.push_back(0.5 * (1.0 - env * std::cos(2.0 * pi * rabi_hz * t)));
  }
  return p;
}

double rabi_formula(double rabi_hz, double detuning_hz, double duration) {
  const double w = 2.0 * pi * rabi_hz, d = 2.0 * pi * detuning_hz;
  const double g2 = w * w + d * d;
  if (g2 == 0.0) return 0.0;
  const double s = std::sin(0.5 * std::sqrt(g2) * duration);
  return w * w / g2 * s * s;
}

Eigen::Vector3d integrate_bloch(const SpinSystem& spin, double rabi_hz, double detuning_hz, double duration,
                                const BlochOptions& opt, double* max_norm) {
  spin.validate();
  if (!(rabi_hz > 0.0)) throw ValidationError("Rabi frequency must be > 0");
  if (!(duration >= 0.0)) throw ValidationError("pulse duration must be >= 0");
  const double w = 2.0 * pi * rabi_hz, d = 2.0 * pi * detuning_hz;
  const double g1 = std::isinf(spin.T1) ? 0.0 : 1.0 / spin.T1;
  const double g2 = std::isinf(spin.T2_intrinsic) ? 0.0 : 1.0 / spin.T2_intrinsic;
  const double hmax = 1.0 / (opt.steps_per_period * std::max(w, std::abs(d)));
  const long steps = std::max<long>(1, static_cast<long>(std::ceil(duration / hmax)));
  const double h = duration / static_cast<double>(steps);

  // ground state along +z; rotation vector (w, 0, d)
  auto f = [&](const Eigen::Vector3d& m) {
    return Eigen::Vector3d(-d * m.y() - g2 * m.x(), d * m.x() - w * m.z() - g2 * m.y(),
                           w * m.y() - g1 * (m.z() - 1.0));
  };
  Eigen::Vector3d m(0.0, 0.0, 1.0);
  double peak = 1.0;
  for (long s = 0; s < steps; ++s) {
    const Eigen::Vector3d k1 = f(m);
    const Eigen::Vector3d k2 = f(m + 0.5 * h * k1);
    const Eigen::Vector3d k3 = f(m + 0.5 * h * k2);
    const Eigen::Vector3d k4 = f(m + h * k3);
    m += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double nrm = m.norm();
    peak = std::max(peak, nrm);
    if (!std::isfinite(nrm) || nrm > 1.0 + 1e-6) {
      std::ostringstream os;
      os << "Bloch integration failed at step " << s + 1 << " of " << steps << " (h = " << h
         << " s, |M| = " << nrm << ")";
      throw NumericalError(os.str());
    }
  }
  if (max_norm) *max_norm = peak;
  return m;
}

std::vector<double> odmr_spectrum(const SpinSystem& spin, double rabi_hz, double duration,
                                  const std::vector<double>& detunings, const BlochOptions& opt) {
  std::vector<double> c(detunings.size());
  std::vector<std::exception_ptr> errors(detunings.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(detunings.size()); ++i) {
    try {
      const auto m = integrate_bloch(spin, rabi_hz, detunings[static_cast<std::size_t>(i)], duration, opt);
      c[static_cast<std::size_t>(i)] = 0.5 * (1.0 - m.z());
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return c;
}

}  // namespace hprobe::spin
