#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hprobe/mw/cpw.hpp"
#include "hprobe/spin/bloch.hpp"

namespace hprobe::spin {

struct RabiMeasurement {
  double static_theta_deg = 0.0;  // quantization axis orientation
  double static_phi_deg = 0.0;
  double rabi_hz = 0.0;
};

struct TomographyResult {
  mw::AcFieldVector field;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // (B [G], theta [deg], phi [deg])
  double rms_residual = 0.0;                             // Hz
  double orientation_condition = 0.0;                    // sigma_min / sigma_max of the axis set
};

// Rabi rates measured at `measured_power` and returned as the field at `reference_power`.
TomographyResult tomography_fit(const std::vector<RabiMeasurement>& measurements, const SpinSystem& spin,
                                double reference_power, double measured_power = 0.0);

// Model rates for a field and a list of axis orientations.
std::vector<double> tomography_model(const mw::AcFieldVector& field, const SpinSystem& spin,
                                     const std::vector<RabiMeasurement>& orientations);

}  // namespace hprobe::spin
