#include "hprobe/fiber/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hprobe/core/constants.hpp"
#include "hprobe/core/error.hpp"
#include "hprobe/core/optimize.hpp"
#include "hprobe/fiber/propagation.hpp"

namespace hprobe::fiber {

using constants::deg;
using constants::pi;
using cplx = std::complex<double>;

void FiberSpec::validate() const {
  if (!(mode_field_diameter > 0.0)) throw ValidationError("mode_field_diameter must be > 0");
  if (!(n_fiber >= 1.0)) throw ValidationError("n_fiber must be >= 1");
  if (!(polish_angle_deg > 0.0 && polish_angle_deg < 90.0))
    throw ValidationError("polish_angle_deg must lie in (0, 90)");
}

double incidence_angle_from_polish(double polish_angle_deg, double n_fiber) {
  FiberSpec{10.4e-6, n_fiber, polish_angle_deg}.validate();
  // the axial ray meets the facet at 90 - theta_p from its normal
  if (n_fiber * std::sin((90.0 - polish_angle_deg) * deg) < 1.0)
    throw ValidationError("no total internal reflection at the polished facet");
  const double s = n_fiber * std::sin((90.0 - 2.0 * polish_angle_deg) * deg);
  if (std::abs(s) > 1.0) {
    std::ostringstream os;
    os << "no propagating exit ray: n sin(90 - 2 theta_p) = " << s;
    throw ValidationError(os.str());
  }
  return std::asin(s) / deg;
}

namespace {

std::vector<double> weights(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  w[0] = x[1] - x[0];
  w[n - 1] = x[n - 1] - x[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) w[i] = 0.5 * (x[i + 1] - x[i - 1]);
  return w;
}

double power(const fdtd::FieldMap2D& f) {
  const auto w = weights(f.coordinates);
  double p = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) p += w[i] * std::norm(f.amplitude[i]);
  return p;
}

bool same_grid(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  const double tol = 1e-9 * (a.back() - a.front() + 1e-30);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

cplx interpolate(const fdtd::FieldMap2D& f, double x) {
  const auto& c = f.coordinates;
  if (x < c.front() || x > c.back()) return {0.0, 0.0};
  const auto it = std::upper_bound(c.begin(), c.end(), x);
  if (it == c.end()) return f.amplitude.back();
  const std::size_t j = static_cast<std::size_t>(it - c.begin());
  const double t = (x - c[j - 1]) / (c[j] - c[j - 1]);
  return (1.0 - t) * f.amplitude[j - 1] + t * f.amplitude[j];
}

}  // namespace

fdtd::FieldMap2D fiber_mode(const FiberSpec& spec, const FiberPose& pose, const MonitorPlane& plane) {
  spec.validate();
  fdtd::FieldMap2D f;
  f.plane_position = plane.plane_position;
  f.coordinates = plane.coordinates;
  f.frequency = constants::c0 / plane.wavelength;
  const double theta = (plane.nominal_angle_deg + pose.pitch_deg) * deg;
  const double wx = spec.waist() / std::cos(theta);
  const double kx = 2.0 * pi / plane.wavelength * std::sin(theta);
  const double xc = plane.nominal_center + pose.offset_x;
  f.amplitude.reserve(f.coordinates.size());
  for (double x : f.coordinates) {
    const double u = x - xc;
    f.amplitude.push_back(std::exp(-u * u / (wx * wx)) * std::polar(1.0, kx * u));
  }
  if (pose.offset_z != 0.0) f = propagate(f, -pose.offset_z);
  const double p = power(f);
  if (!(p > 0.0)) throw ValidationError("fiber mode has no power on the monitor plane");
  for (auto& a : f.amplitude) a /= std::sqrt(p);
  return f;
}

double overlap(const fdtd::FieldMap2D& a, const fdtd::FieldMap2D& b) {
  a.validate();
  b.validate();
  const double pa = power(a), pb = power(b);
  if (!(pa > 0.0) || !(pb > 0.0)) throw ValidationError("overlap of a zero-power field");
  const auto w = weights(a.coordinates);
  cplx s{0.0, 0.0};
  if (same_grid(a.coordinates, b.coordinates)) {
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * a.amplitude[i] * std::conj(b.amplitude[i]);
  } else {
    for (std::size_t i = 0; i < w.size(); ++i)
      s += w[i] * a.amplitude[i] * std::conj(interpolate(b, a.coordinates[i]));
  }
  return std::min(1.0, std::norm(s) / (pa * pb));
}

double overlap_y(double waveguide_width, double mfd) {
  return overlap_y(waveguide_width, mfd, 0.0, 0.0, 1536e-9, 0.0);
}

double overlap_y(double waveguide_width, double mfd, double offset, double tilt_deg, double wavelength,
                 double height) {
  if (!(waveguide_width > 0.0) || !(mfd > 0.0)) throw ValidationError("overlap_y needs positive width and MFD");
  if (height < 0.0) throw ValidationError("fiber height must be >= 0");
  const double half = 0.5 * waveguide_width + std::abs(offset) + 4.0 * mfd + 0.3 * height;
  const std::size_t n = 4096;
  const double dy = 2.0 * half / static_cast<double>(n);
  fdtd::FieldMap2D guide, gauss;
  guide.frequency = gauss.frequency = constants::c0 / wavelength;
  const double w = 0.5 * mfd, ky = 2.0 * pi / wavelength * std::sin(tilt_deg * deg);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = -half + (static_cast<double>(i) + 0.5) * dy;
    guide.coordinates.push_back(y);
    gauss.coordinates.push_back(y);
    guide.amplitude.emplace_back(std::abs(y) < 0.5 * waveguide_width ? std::cos(pi * y / waveguide_width) : 0.0, 0.0);
    const double u = y - offset;
    gauss.amplitude.push_back(std::exp(-u * u / (w * w)) * std::polar(1.0, ky * u));
  }
  if (height > 0.0) guide = propagate(guide, height);
  return overlap(guide, gauss);
}

fdtd::FieldMap2D pad_field(const fdtd::FieldMap2D& field, double margin) {
  field.validate();
  const std::size_t n = field.coordinates.size();
  if (n < 2) throw ValidationError("cannot pad a field with fewer than two samples");
  const double dx = (field.coordinates.back() - field.coordinates.front()) / static_cast<double>(n - 1);
  const std::size_t m = static_cast<std::size_t>(std::ceil(margin / dx));
  fdtd::FieldMap2D out;
  out.plane_position = field.plane_position;
  out.frequency = field.frequency;
  for (std::size_t j = m; j > 0; --j) {
    out.coordinates.push_back(field.coordinates.front() - static_cast<double>(j) * dx);
    out.amplitude.emplace_back(0.0, 0.0);
  }
  out.coordinates.insert(out.coordinates.end(), field.coordinates.begin(), field.coordinates.end());
  out.amplitude.insert(out.amplitude.end(), field.amplitude.begin(), field.amplitude.end());
  for (std::size_t j = 1; j <= m; ++j) {
    out.coordinates.push_back(field.coordinates.back() + static_cast<double>(j) * dx);
    out.amplitude.emplace_back(0.0, 0.0);
  }
  return out;
}

CouplingModel::CouplingModel(FiberSpec fiber, const fdtd::FieldMap2D& grating_field, double waveguide_width,
                             const grating::EfficiencyBudget& factors, double margin)
    : fiber_(fiber), width_(waveguide_width), factors_(factors) {
  fiber_.validate();
  if (!(waveguide_width > 0.0)) throw ValidationError("waveguide_width must be > 0");
  const std::size_t n0 = grating_field.coordinates.size();
  field_ = pad_field(grating_field, margin);
  support_begin_ = (field_.coordinates.size() - n0) / 2;
  support_end_ = support_begin_ + n0;

  // intensity centroid as the x bracket center
  double sw = 0.0, sx = 0.0;
  for (std::size_t i = 0; i < n0; ++i) {
    const double p = std::norm(grating_field.amplitude[i]);
    sw += p;
    sx += p * grating_field.coordinates[i];
  }
  if (!(sw > 0.0)) throw ValidationError("grating field has zero power");
  const double xc = sx / sw;
  const double theta_d = fdtd::extract_diffraction_angle(grating_field);
  const double span = 2.0 * fiber_.mode_field_diameter;
  auto best_x = [&](double theta) {
    theta0_ = theta;
    return opt::golden_max([&](double x) { x0_ = x; return overlap_x({}); }, xc - span, xc + span, 1e-9);
  };
  theta0_ = opt::golden_max([&](double th) { x0_ = best_x(th); return overlap_x({}); }, theta_d - 5.0, theta_d + 5.0, 1e-4);
  x0_ = best_x(theta0_);
}

MonitorPlane CouplingModel::plane() const {
  return MonitorPlane{field_.plane_position, field_.coordinates, field_.wavelength(), x0_, theta0_};
}

double CouplingModel::overlap_x(const FiberPose& pose) const {
  if (pose.offset_z < 0.0) throw ValidationError("fiber height must be >= 0");
  FiberPose flat = pose;
  flat.offset_z = 0.0;
  const auto mode = fiber_mode(fiber_, flat, plane());
  if (pose.offset_z == 0.0) return overlap(field_, mode);
  return overlap(propagate(field_, pose.offset_z), mode);
}

double CouplingModel::overlap_y(const FiberPose& pose) const {
  return fiber::overlap_y(width_, fiber_.mode_field_diameter, pose.offset_y, pose.yaw_deg, field_.wavelength(),
                          pose.offset_z);
}

double CouplingModel::overlap_2d(const FiberPose& pose) const {
  if (pose.offset_z != 0.0) throw ValidationError("rotation is evaluated at zero fiber height only");
  // 100 nm x-sampling of the grating support, midpoint rule across the waveguide width
  const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(
      std::llround(100e-9 / (field_.coordinates[1] - field_.coordinates[0]))));
  const double dx = stride * (field_.coordinates[1] - field_.coordinates[0]);
  const std::size_t ny = 128;
  const double dy = width_ / static_cast<double>(ny);
  const double theta = (theta0_ + pose.pitch_deg) * deg;
  const double w = fiber_.waist(), wx = w / std::cos(theta);
  const double k = 2.0 * pi / field_.wavelength();
  const double kx = k * std::sin(theta), ky = k * std::sin(pose.yaw_deg * deg);
  const double cr = std::cos(pose.rotation_deg * deg), sr = std::sin(pose.rotation_deg * deg);
  const double xc = x0_ + pose.offset_x, yc = pose.offset_y;
  cplx s{0.0, 0.0};
  double pg = 0.0;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const double y = -0.5 * width_ + (static_cast<double>(iy) + 0.5) * dy;
    const double gy = std::cos(pi * y / width_);
    for (std::size_t i = support_begin_; i < support_end_; i += stride) {
      const double x = field_.coordinates[i];
      const cplx g = field_.amplitude[i] * gy;
      const double u = cr * (x - xc) + sr * (y - yc);
      const double v = -sr * (x - xc) + cr * (y - yc);
      const cplx f = std::exp(-u * u / (wx * wx) - v * v / (w * w)) * std::polar(1.0, kx * u + ky * v);
      s += g * std::conj(f);
      pg += std::norm(g);
    }
  }
  s *= dx * dy;
  pg *= dx * dy;
  const double pf = 0.5 * pi * wx * w;
  return std::min(1.0, std::norm(s) / (pg * pf));
}

CouplingResult CouplingModel::couple(const FiberPose& pose) const {
  const double oy = overlap_y(pose);
  const double ox = pose.rotation_deg == 0.0 ? overlap_x(pose) : overlap_2d(pose) / oy;
  CouplingResult r;
  r.budget = grating::compose_budget(factors_.directionality_D, std::min(1.0, ox), oy, factors_.taper_transmission,
                                     factors_.interface_transmission);
  r.eta = r.budget.total_eta;
  return r;
}

}  // namespace hprobe::fiber
