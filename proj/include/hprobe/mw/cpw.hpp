#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

namespace hprobe::mw {

enum class CurrentDistribution { uniform, edge_weighted };
// single_sided keeps only the ground plane on the -x side of the pin.
enum class GroundLayout { symmetric, single_sided };

// Conductors run along y; the pin is centered at x = 0 with its top surface at z = 0.
struct CpwGeometry {
  double center_width = 50e-6;
  double gap = 5e-6;
  double ground_width = 500e-6;
  double metal_thickness = 1e-6;
  double standoff_dz = 125e-6;
  double characteristic_impedance = 50.0;
  GroundLayout grounds = GroundLayout::single_sided;
  CurrentDistribution distribution = CurrentDistribution::uniform;
  int filaments = 64;        // across each conductor width
  int thickness_layers = 4;  // across the metal thickness

  void validate() const;
};

// Spherical form, theta from +z, phi from +x. The overall sign of an AC field is arbitrary;
// it is fixed so that phi lies in (-90, 90].
struct AcFieldVector {
  double magnitude_B = 0.0;  // gauss
  double polar_theta_deg = 0.0;
  double azimuth_phi_deg = 0.0;
  double reference_power = 0.0;  // W
  double frequency = 1.76e9;

  Eigen::Vector3d cartesian() const;  // gauss
  AcFieldVector at_power(double power) const;  // sqrt(P) rescaling
  static AcFieldVector from_cartesian(const Eigen::Vector3d& b_gauss, double power, double frequency);
};

struct Filament {
  double x = 0.0, z = 0.0;
  double current = 0.0;  // A, along +y
};

double peak_current(double power, double impedance);

// Filament set for the given peak pin current; total current is zero.
std::vector<Filament> filament_set(const CpwGeometry& g, double current);

// Biot-Savart sum of infinite lines, tesla.
Eigen::Vector3d line_field(const std::vector<Filament>& filaments, const Eigen::Vector3d& point);

// Signed field in gauss at a point relative to the pin surface center.
Eigen::Vector3d field_vector(const CpwGeometry& g, double power, const Eigen::Vector3d& point);
AcFieldVector field_at_point(const CpwGeometry& g, double power, const Eigen::Vector3d& point,
                             double frequency = 1.76e9);

// Field above the pin center at each standoff.
std::vector<AcFieldVector> field_profile(const CpwGeometry& g, double power, const std::vector<double>& dz);

// Columns x_m, y_m, z_m, Bx_G, By_G, Bz_G.
void write_field_map_csv(const std::filesystem::path& path, const CpwGeometry& g, double power,
                         const std::vector<Eigen::Vector3d>& points);

}  // namespace hprobe::mw
