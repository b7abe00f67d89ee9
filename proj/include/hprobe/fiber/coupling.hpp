#pragma once

#include <vector>

#include "hprobe/fdtd/grating_run.hpp"
#include "hprobe/grating/budget.hpp"

namespace hprobe::fiber {

struct FiberSpec {
  double mode_field_diameter = 10.4e-6;
  double n_fiber = 1.47;
  double polish_angle_deg = 41.2;

  void validate() const;
  double waist() const { return 0.5 * mode_field_diameter; }
};

// Offsets relative to the optimal working point. Pitch tilts the fiber in the xz-plane,
// yaw in the yz-plane, rotation turns it about the surface normal.
struct FiberPose {
  double offset_x = 0.0, offset_y = 0.0, offset_z = 0.0;
  double yaw_deg = 0.0, pitch_deg = 0.0, rotation_deg = 0.0;
};

struct CouplingResult {
  double eta = 0.0;
  grating::EfficiencyBudget budget;
};

// Exit angle in air of the ray reflected by the polished facet.
double incidence_angle_from_polish(double polish_angle_deg, double n_fiber);

// Sampling line for fiber_mode. The nominal spot is the beam center at zero pose, the
// nominal angle the tilt from the normal toward +x.
struct MonitorPlane {
  double plane_position = 0.0;
  std::vector<double> coordinates;
  double wavelength = 1536e-9;
  double nominal_center = 0.0;
  double nominal_angle_deg = 0.0;
};

// Tilted Gaussian projected onto the plane (footprint waist w / cos(theta)), unit power.
// offset_z lifts the fiber: the mode is propagated back down to the plane.
fdtd::FieldMap2D fiber_mode(const FiberSpec& spec, const FiberPose& pose, const MonitorPlane& plane);

// |<a, b>|^2 / (|a|^2 |b|^2). b is linearly resampled onto a's grid if they differ (zero
// outside its support); each norm is taken on the field's own grid.
double overlap(const fdtd::FieldMap2D& a, const fdtd::FieldMap2D& b);

// Cosine lateral waveguide mode against a centered Gaussian of the given MFD.
double overlap_y(double waveguide_width, double mfd);
// General form: Gaussian displaced by `offset`, tilted to a linear phase k sin(tilt) y.
double overlap_y(double waveguide_width, double mfd, double offset, double tilt_deg, double wavelength,
                 double height = 0.0);

// Zero-extends a field by `margin` on both sides, keeping its step.
fdtd::FieldMap2D pad_field(const fdtd::FieldMap2D& field, double margin);

// Grating field plus the fiber at its optimal working point (center and tilt that
// maximize the x overlap). Fixed factors D, taper and interface come from `factors`.
class CouplingModel {
 public:
  CouplingModel(FiberSpec fiber, const fdtd::FieldMap2D& grating_field, double waveguide_width,
                const grating::EfficiencyBudget& factors, double margin = 30e-6);

  const FiberSpec& fiber() const { return fiber_; }
  const fdtd::FieldMap2D& field() const { return field_; }
  double waveguide_width() const { return width_; }
  double nominal_center() const { return x0_; }
  double nominal_angle_deg() const { return theta0_; }
  MonitorPlane plane() const;

  double overlap_x(const FiberPose& pose) const;
  double overlap_y(const FiberPose& pose) const;
  // Two-dimensional overlap on a 100 nm grid; matches overlap_x * overlap_y at zero rotation
  // to sampling accuracy.
  double overlap_2d(const FiberPose& pose) const;
  CouplingResult couple(const FiberPose& pose = {}) const;

 private:
  FiberSpec fiber_;
  fdtd::FieldMap2D field_;
  double width_;
  grating::EfficiencyBudget factors_;
  double x0_ = 0.0, theta0_ = 0.0;
  std::size_t support_begin_ = 0, support_end_ = 0;
};

}  // namespace hprobe::fiber
