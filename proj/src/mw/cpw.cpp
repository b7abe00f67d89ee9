#include "hprobe/mw/cpw.hpp"

#include <cmath>
#include <sstream>

#include "hprobe/core/constants.hpp"
#include "hprobe/core/csv.hpp"
#include "hprobe/core/error.hpp"

namespace hprobe::mw {

using constants::deg;
using constants::pi;

void CpwGeometry::validate() const {
  if (!(center_width > 0.0 && gap > 0.0 && ground_width > 0.0 && metal_thickness > 0.0))
    throw ValidationError("CPW lengths must be > 0");
  if (!(standoff_dz >= 0.0)) throw ValidationError("standoff must be >= 0");
  if (!(characteristic_impedance > 0.0)) throw ValidationError("impedance must be > 0");
  if (filaments < 1 || thickness_layers < 1) throw ValidationError("filament counts must be >= 1");
}

Eigen::Vector3d AcFieldVector::cartesian() const {
  const double t = polar_theta_deg * deg, p = azimuth_phi_deg * deg;
  return magnitude_B * Eigen::Vector3d(std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t));
}

AcFieldVector AcFieldVector::at_power(double power) const {
  if (!(power >= 0.0)) throw ValidationError("power must be >= 0");
  if (!(reference_power > 0.0)) throw ValidationError("field has no reference power to rescale from");
  AcFieldVector f = *this;
  f.magnitude_B *= std::sqrt(power / reference_power);
  f.reference_power = power;
  return f;
}

AcFieldVector AcFieldVector::from_cartesian(const Eigen::Vector3d& b, double power, double frequency) {
  Eigen::Vector3d v = b;
  if (v.x() < 0.0 || (v.x() == 0.0 && v.y() < 0.0)) v = -v;
  AcFieldVector f;
  f.magnitude_B = v.norm();
  f.reference_power = power;
  f.frequency = frequency;
  if (f.magnitude_B > 0.0) {
    f.polar_theta_deg = std::acos(std::clamp(v.z() / f.magnitude_B, -1.0, 1.0)) / deg;
    f.azimuth_phi_deg = std::atan2(v.y(), v.x()) / deg;
    if (f.azimuth_phi_deg == -90.0) f.azimuth_phi_deg = 90.0;
  }
  return f;
}

double peak_current(double power, double impedance) {
  if (!(power >= 0.0)) throw ValidationError("power must be >= 0");
  if (!(impedance > 0.0)) throw ValidationError("impedance must be > 0");
  return std::sqrt(2.0 * power / impedance);
}

namespace {

// Filaments for a conductor spanning [x0, x0 + w] x [-t, 0] carrying `current`.
void add_conductor(std::vector<Filament>& out, const CpwGeometry& g, double x0, double w, double current) {
  const int nf = g.filaments, nt = g.thickness_layers;
  std::vector<double> weight(static_cast<std::size_t>(nf));
  double total = 0.0;
  for (int i = 0; i < nf; ++i) {
    const double u = 2.0 * (i + 0.5) / nf - 1.0;  // -1..1 across the width
    weight[static_cast<std::size_t>(i)] =
        g.distribution == CurrentDistribution::uniform ? 1.0 : 1.0 / std::sqrt(1.0 - u * u);
    total += weight[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < nf; ++i)
    for (int k = 0; k < nt; ++k)
      out.push_back({x0 + w * (i + 0.5) / nf, -g.metal_thickness * (k + 0.5) / nt,
                     current * weight[static_cast<std::size_t>(i)] / (total * nt)});
}

bool inside_conductor(const CpwGeometry& g, const Eigen::Vector3d& p) {
  if (p.z() > 0.0 || p.z() < -g.metal_thickness) return false;
  const double hw = 0.5 * g.center_width;
  if (std::abs(p.x()) <= hw) return true;
  const double in = hw + g.gap, out = in + g.ground_width;
  if (p.x() <= -in && p.x() >= -out) return true;
  return g.grounds == GroundLayout::symmetric && p.x() >= in && p.x() <= out;
}

}  // namespace

std::vector<Filament> filament_set(const CpwGeometry& g, double current) {
  g.validate();
  std::vector<Filament> f;
  const double hw = 0.5 * g.center_width;
  add_conductor(f, g, -hw, g.center_width, current);
  if (g.grounds == GroundLayout::symmetric) {
    add_conductor(f, g, hw + g.gap, g.ground_width, -0.5 * current);
    add_conductor(f, g, -hw - g.gap - g.ground_width, g.ground_width, -0.5 * current);
  } else {
    add_conductor(f, g, -hw - g.gap - g.ground_width, g.ground_width, -current);
  }
  return f;
}

Eigen::Vector3d line_field(const std::vector<Filament>& filaments, const Eigen::Vector3d& p) {
  // current along +y at (xf, zf): B = mu0 I / (2 pi r^2) * (y x r)
  double bx = 0.0, bz = 0.0;
  for (const auto& f : filaments) {
    const double dx = p.x() - f.x, dz = p.z() - f.z;
    const double r2 = dx * dx + dz * dz;
    if (!(r2 > 0.0)) throw GeometryError("field point coincides with a current filament");
    const double s = constants::mu0 * f.current / (2.0 * pi * r2);
    bx += s * dz;
    bz -= s * dx;
  }
  return {bx, 0.0, bz};
}

Eigen::Vector3d field_vector(const CpwGeometry& g, double power, const Eigen::Vector3d& point) {
  g.validate();
  if (inside_conductor(g, point)) {
    std::ostringstream os;
    os << "field point (" << point.x() << ", " << point.z() << ") m lies inside a conductor";
    throw GeometryError(os.str());
  }
  const auto fil = filament_set(g, peak_current(power, g.characteristic_impedance));
  return line_field(fil, point) * constants::tesla_to_gauss;
}

AcFieldVector field_at_point(const CpwGeometry& g, double power, const Eigen::Vector3d& point, double frequency) {
  return AcFieldVector::from_cartesian(field_vector(g, power, point), power, frequency);
}

std::vector<AcFieldVector> field_profile(const CpwGeometry& g, double power, const std::vector<double>& dz) {
  std::vector<AcFieldVector> out;
  for (double z : dz) {
    if (!(z > 0.0)) throw ValidationError("profile standoffs must be > 0");
    out.push_back(field_at_point(g, power, {0.0, 0.0, z}));
  }
  return out;
}

void write_field_map_csv(const std::filesystem::path& path, const CpwGeometry& g, double power,
                         const std::vector<Eigen::Vector3d>& points) {
  csv::Table t;
  t.header = {"x_m", "y_m", "z_m", "Bx_G", "By_G", "Bz_G"};
  for (const auto& p : points) {
    const auto b = field_vector(g, power, p);
    t.rows.push_back({csv::format_double(p.x()), csv::format_double(p.y()), csv::format_double(p.z()),
                      csv::format_double(b.x()), csv::format_double(b.y()), csv::format_double(b.z())});
  }
  csv::write(path, t);
}

}  // namespace hprobe::mw
