#include "hprobe/fiber/tolerance.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#include "hprobe/core/constants.hpp"
#include "hprobe/core/csv.hpp"
#include "hprobe/core/error.hpp"
#include "hprobe/core/least_squares.hpp"
#include "hprobe/core/optimize.hpp"

namespace hprobe::fiber {

using constants::deg;

Dof parse_dof(const std::string& name) {
  if (name == "x") return Dof::x;
  if (name == "y") return Dof::y;
  if (name == "z") return Dof::z;
  if (name == "yaw") return Dof::yaw;
  if (name == "pitch") return Dof::pitch;
  if (name == "rotation") return Dof::rotation;
  throw ValidationError("unknown degree of freedom '" + name + "' (x, y, z, yaw, pitch, rotation)");
}

std::string dof_name(Dof dof) {
  switch (dof) {
    case Dof::x: return "x";
    case Dof::y: return "y";
    case Dof::z: return "z";
    case Dof::yaw: return "yaw";
    case Dof::pitch: return "pitch";
    case Dof::rotation: return "rotation";
  }
  return "?";
}

bool is_angular(Dof dof) { return dof == Dof::yaw || dof == Dof::pitch || dof == Dof::rotation; }

namespace {

// Maximizer of f on [c - h, c + h]; an optimum on the bracket edge means the
// re-optimization did not converge.
template <class F>
double reoptimize(F&& f, double c, double h, Dof dof, double at) {
  const double x = opt::golden_max(f, c - h, c + h, 1e-3 * h);
  if (std::abs(x - c) > 0.99 * h) {
    std::ostringstream os;
    os << "translation re-optimization hit its bracket at " << dof_name(dof) << " = " << at;
    throw NumericalError(os.str());
  }
  return x;
}

template <class F>
void for_each_point(std::size_t n, F&& body) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<double> linspace(double lo, double hi, int steps) {
  std::vector<double> v(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (steps - 1);
  return v;
}

// Re-optimized x overlap at fiber height h (beam walk-off h tan(theta) near the center).
double best_overlap_x_at(const CouplingModel& m, double h) {
  const double mfd = m.fiber().mode_field_diameter;
  const double shift = h * std::tan(m.nominal_angle_deg() * deg);
  FiberPose p;
  p.offset_z = h;
  const double x = reoptimize([&](double ox) { p.offset_x = ox; return m.overlap_x(p); }, shift, mfd + 0.2 * h,
                              Dof::z, h);
  p.offset_x = x;
  return m.overlap_x(p);
}

}  // namespace

SweepCurve tolerance_sweep(const CouplingModel& model, Dof dof, double lo, double hi, int steps) {
  if (steps < 2) throw ValidationError("tolerance sweep needs at least 2 steps");
  if (!(hi > lo)) throw ValidationError("tolerance sweep range must be increasing");
  if (is_angular(dof) && std::max(std::abs(lo), std::abs(hi)) > 5.0)
    throw ValidationError("angular sweep range exceeds 5 degrees");
  if (!is_angular(dof) && std::max(std::abs(lo), std::abs(hi)) > 30e-6)
    throw ValidationError("translation sweep range exceeds 30 um");
  if (dof == Dof::z && lo < 0.0) throw ValidationError("fiber height must be >= 0");

  SweepCurve c;
  c.dof = dof;
  c.offsets = linspace(lo, hi, steps);
  c.eta.assign(c.offsets.size(), 0.0);
  const double mfd = model.fiber().mode_field_diameter;
  const double ox0 = model.overlap_x({}), oy0 = model.overlap_y({});

  for_each_point(c.offsets.size(), [&](std::size_t i) {
    const double v = c.offsets[i];
    FiberPose p;
    double o = 0.0;
    switch (dof) {
      case Dof::x:
        p.offset_x = v;
        o = model.overlap_x(p) * oy0;
        break;
      case Dof::y:
        p.offset_y = v;
        o = ox0 * model.overlap_y(p);
        break;
      case Dof::z:
        p.offset_z = v;
        o = best_overlap_x_at(model, v) * model.overlap_y(p);
        break;
      case Dof::pitch: {
        p.pitch_deg = v;
        p.offset_x = reoptimize([&](double x) { p.offset_x = x; return model.overlap_x(p); }, 0.0, mfd, dof, v);
        o = model.overlap_x(p) * oy0;
        break;
      }
      case Dof::yaw: {
        p.yaw_deg = v;
        p.offset_y = reoptimize([&](double y) { p.offset_y = y; return model.overlap_y(p); }, 0.0, mfd, dof, v);
        o = ox0 * model.overlap_y(p);
        break;
      }
      case Dof::rotation: {
        p.rotation_deg = v;
        for (int round = 0; round < 3; ++round) {
          p.offset_x = reoptimize([&](double x) { p.offset_x = x; return model.overlap_2d(p); }, 0.0, mfd, dof, v);
          p.offset_y = reoptimize([&](double y) { p.offset_y = y; return model.overlap_2d(p); }, 0.0, mfd, dof, v);
        }
        o = model.overlap_2d(p);
        break;
      }
    }
    c.eta[i] = o;
  });

  const double peak = *std::max_element(c.eta.begin(), c.eta.end());
  if (!(peak > 0.0)) throw NumericalError("tolerance sweep found no coupling");
  const double scale = model.couple().eta / peak;
  for (double& e : c.eta) e *= scale;
  return c;
}

ZCurve z_dependence(const CouplingModel& model, const std::vector<double>& heights) {
  ZCurve zc;
  zc.heights = heights;
  const std::size_t n = heights.size();
  zc.eta.assign(n, 0.0);
  zc.overlap_x.assign(n, 0.0);
  zc.overlap_y.assign(n, 0.0);
  const auto nominal = model.couple();
  const auto& b = nominal.budget;
  const double fixed = b.directionality_D * b.taper_transmission * b.interface_transmission;
  for (double h : heights)
    if (h < 0.0) throw ValidationError("fiber height must be >= 0");
  for_each_point(n, [&](std::size_t i) {
    const double h = heights[i];
    zc.overlap_x[i] = h == 0.0 ? model.overlap_x({}) : best_overlap_x_at(model, h);
    FiberPose p;
    p.offset_z = h;
    zc.overlap_y[i] = model.overlap_y(p);
    zc.eta[i] = fixed * zc.overlap_x[i] * zc.overlap_y[i];
  });
  return zc;
}

GaussianFit fit_gaussian_diameter(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 4) throw ValidationError("Gaussian fit needs >= 4 matching samples");
  const std::size_t n = x.size();
  const auto imax = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  double sw = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += y[i];
    s2 += y[i] * (x[i] - x[imax]) * (x[i] - x[imax]);
  }
  if (!(sw > 0.0)) throw ValidationError("Gaussian fit of a non-positive curve");
  Eigen::VectorXd p0(3);
  p0 << y[imax], x[imax], 2.0 * std::sqrt(s2 / sw);
  auto fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    r.resize(static_cast<long>(n));
    jac.resize(static_cast<long>(n), 3);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = x[i] - p(1), g = std::exp(-2.0 * u * u / (p(2) * p(2)));
      const long k = static_cast<long>(i);
      r(k) = p(0) * g - y[i];
      jac(k, 0) = g;
      jac(k, 1) = p(0) * g * 4.0 * u / (p(2) * p(2));
      jac(k, 2) = p(0) * g * 4.0 * u * u / (p(2) * p(2) * p(2));
    }
  };
  const auto res = lsq::levenberg_marquardt(fn, p0);
  if (!res.converged) throw NumericalError("Gaussian fit did not converge");
  return GaussianFit{res.params(0), res.params(1), 2.0 * std::abs(res.params(2)), res.rms_residual};
}

void write_curve_csv(const std::filesystem::path& path, const SweepCurve& curve) {
  csv::Table t;
  t.header = {is_angular(curve.dof) ? "offset_deg" : "offset_m", "eta"};
  for (std::size_t i = 0; i < curve.offsets.size(); ++i)
    t.rows.push_back({csv::format_double(curve.offsets[i]), csv::format_double(curve.eta[i])});
  csv::write(path, t);
}

}  // namespace hprobe::fiber
