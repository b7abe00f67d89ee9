#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hprobe/fiber/coupling.hpp"

namespace hprobe::fiber {

enum class Dof { x, y, z, yaw, pitch, rotation };

Dof parse_dof(const std::string& name);
std::string dof_name(Dof dof);
bool is_angular(Dof dof);

// Offsets in meters for translations, degrees for angles.
struct SweepCurve {
  Dof dof = Dof::x;
  std::vector<double> offsets;
  std::vector<double> eta;
};

// Coupling vs one degree of freedom. Angular points re-optimize the translation (x for
// pitch, y for yaw, both for rotation) and the z sweep re-optimizes x. The curve is scaled
// so its peak equals the nominal efficiency.
SweepCurve tolerance_sweep(const CouplingModel& model, Dof dof, double lo, double hi, int steps);

// Efficiency vs fiber height, grating field propagated up before the overlap.
struct ZCurve {
  std::vector<double> heights;
  std::vector<double> eta, overlap_x, overlap_y;
};
ZCurve z_dependence(const CouplingModel& model, const std::vector<double>& heights);

struct GaussianFit {
  double peak = 0.0;
  double center = 0.0;
  double diameter = 0.0;  // 1/e^2 full width
  double rms_residual = 0.0;
};
// Least-squares fit of peak * exp(-2 (x - center)^2 / (diameter/2)^2).
GaussianFit fit_gaussian_diameter(const std::vector<double>& x, const std::vector<double>& y);

void write_curve_csv(const std::filesystem::path& path, const SweepCurve& curve);

}  // namespace hprobe::fiber
