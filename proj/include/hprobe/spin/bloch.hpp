#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "hprobe/mw/cpw.hpp"

namespace hprobe::spin {

// Effective two-level spin. Rates and frequencies are cyclic (Hz).
struct SpinSystem {
  double transition_frequency = 1.76e9;
  double gyromagnetic_gamma = 1.2e6;  // Hz/G, effective isotropic
  Eigen::Vector3d quantization_axis = Eigen::Vector3d::UnitZ();
  double T1 = std::numeric_limits<double>::infinity();
  double T2_intrinsic = std::numeric_limits<double>::infinity();

  void validate() const;
};

// Unit vector from polar/azimuth angles in degrees.
Eigen::Vector3d axis_from_angles(double theta_deg, double phi_deg);

// Cyclic Rabi frequency gamma/2 |B_perp|.
double rabi_frequency(const SpinSystem& spin, const mw::AcFieldVector& field);

// gamma that gives a pi pulse of `pi_time` for `field` (with its power) and the spin's axis.
double effective_gamma_for_pi_time(double pi_time, const mw::AcFieldVector& field,
                                   const Eigen::Vector3d& quantization_axis);

// Upper-state population sin^2(pi f t), with the coherent part damped by exp(-t/T2).
std::vector<double> rabi_trace(const SpinSystem& spin, double rabi_hz, const std::vector<double>& times);

// Analytic rectangular-pulse transition probability (no relaxation).
double rabi_formula(double rabi_hz, double detuning_hz, double duration);

struct BlochOptions {
  double steps_per_period = 50.0;  // h <= 1 / (steps_per_period * max(omega, |delta|))
};

// Rotating-frame Bloch equations from the ground state, fixed-step RK4. Returns the
// final Bloch vector.
Eigen::Vector3d integrate_bloch(const SpinSystem& spin, double rabi_hz, double detuning_hz, double duration,
                                const BlochOptions& options = {}, double* max_norm = nullptr);

// Population contrast (1 - Mz) / 2 at the end of the pulse for each detuning.
std::vector<double> odmr_spectrum(const SpinSystem& spin, double rabi_hz, double duration,
                                  const std::vector<double>& detunings_hz, const BlochOptions& options = {});

}  // namespace hprobe::spin
