#include "hprobe/fdtd/grating_run.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "hprobe/core/constants.hpp"
#include "hprobe/core/error.hpp"
#include "hprobe/core/fftw_lock.hpp"

namespace hprobe::fdtd {

using constants::c0;
using constants::pi;

void FieldMap2D::validate() const {
  if (coordinates.size() != amplitude.size())
    throw ValidationError("field map: amplitude and coordinate lengths differ");
  for (std::size_t i = 1; i < coordinates.size(); ++i)
    if (!(coordinates[i] > coordinates[i - 1]))
      throw ValidationError("field map: coordinates must be strictly increasing");
}

double FieldMap2D::wavelength() const { return c0 / frequency; }
double FluxReport::wavelength() const { return c0 / frequency; }

GratingProblem make_problem(const LayerStack& stack, const grating::ApodizationSchedule& schedule,
                            double grid_step, int pml_cells, double courant) {
  const auto plan = plan_domain(stack, schedule, grid_step, pml_cells, courant);
  return GratingProblem{stack, schedule, plan.domain, plan.layout, SourceSpec{}};
}

std::pair<std::vector<double>, double> column_mode(const Grid2D& eps, std::size_t i, double wavelength) {
  // Discrete Helmholtz operator d2/dz2 + k0^2 eps on the interior nodes (grid units).
  const std::size_t n = eps.nz - 2;
  const double k0 = 2.0 * pi * eps.step / wavelength;
  Eigen::VectorXd diag(n), sub(n - 1);
  for (std::size_t k = 0; k < n; ++k) diag(k) = -2.0 + k0 * k0 * eps.at(i, k + 1);
  sub.setOnes();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  const double beta2 = es.eigenvalues()(n - 1);
  if (!(beta2 > 0.0)) throw NumericalError("no guided mode in source cross-section");
  std::vector<double> profile(eps.nz, 0.0);
  const Eigen::VectorXd v = es.eigenvectors().col(n - 1);
  const double sign = v.sum() >= 0.0 ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) profile[k + 1] = sign * v(k);
  // modal index from the discrete dispersion relation 4 sin^2(beta/2) = beta2
  const double beta = 2.0 * std::asin(std::min(1.0, std::sqrt(beta2) / 2.0));
  return {profile, beta / k0};
}

namespace {

struct Monitors {
  std::size_t refl, trans, up, down;
  std::size_t i_refl, i_trans, k_up, k_down;
};

Monitors attach(Simulation& sim, const GratingLayout& L, double dx, const std::vector<double>& freqs) {
  Monitors m;
  using O = MonitorLine::Orientation;
  // monitor positions are H-node coordinates (multiples of dx); node j sits at (j+1) dx
  m.i_refl = static_cast<std::size_t>(std::llround(L.reflection_monitor_x / dx)) - 1;
  m.i_trans = static_cast<std::size_t>(std::llround(L.transmission_monitor_x / dx)) - 1;
  m.k_up = static_cast<std::size_t>(std::llround(L.up_monitor_z / dx)) - 1;
  m.k_down = static_cast<std::size_t>(std::llround(L.down_monitor_z / dx)) - 1;
  m.refl = sim.add_monitor({O::vertical, m.i_refl, m.k_down + 1, m.k_up + 1}, freqs);
  m.trans = sim.add_monitor({O::vertical, m.i_trans, m.k_down + 1, m.k_up + 1}, freqs);
  m.up = sim.add_monitor({O::horizontal, m.k_up, m.i_refl + 1, m.i_trans + 1}, freqs);
  m.down = sim.add_monitor({O::horizontal, m.k_down, m.i_refl + 1, m.i_trans + 1}, freqs);
  return m;
}

// Projections of E and H on the mode profile over the monitor's z-range.
std::pair<std::complex<double>, std::complex<double>> project(const MonitorData& d, std::size_t f,
                                                              const std::vector<double>& profile) {
  const std::size_t n = d.points();
  std::complex<double> pe{0.0, 0.0}, ph{0.0, 0.0};
  double norm = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const double w = profile[d.line.begin + p];
    pe += w * d.e[f * n + p];
    ph += w * d.h[f * n + p];
    norm += w * w;
  }
  return {pe / norm, ph / norm};
}

struct RunOutput {
  std::vector<MonitorData> data;
  Monitors idx;
  RunStats stats;
};

RunOutput simulate(const Grid2D& eps, const GratingProblem& p, const std::vector<double>& freqs,
                   const FdtdOptions& opt) {
  Simulation sim(eps, p.domain, SimulationOptions{opt.parallel});
  const std::size_t i_src = static_cast<std::size_t>(p.layout.source_x / p.domain.grid_step);
  auto [profile, neff] = column_mode(eps, i_src, p.source.center_wavelength);
  (void)neff;
  sim.set_line_source(i_src, profile, GaussianPulse::from_band(p.source.center_wavelength, p.source.bandwidth),
                      p.source.amplitude);
  RunOutput out;
  out.idx = attach(sim, p.layout, p.domain.grid_step, freqs);
  out.stats = sim.run();
  for (std::size_t id : {out.idx.refl, out.idx.trans, out.idx.up, out.idx.down}) out.data.push_back(sim.monitor(id));
  return out;
}

}  // namespace

GratingRunResult run_fdtd(const GratingProblem& p, const std::vector<double>& wavelengths,
                          const FdtdOptions& opt) {
  p.stack.validate();
  p.domain.validate();
  if (wavelengths.empty()) throw ValidationError("no wavelengths requested");
  const auto pulse = GaussianPulse::from_band(p.source.center_wavelength, p.source.bandwidth);
  std::vector<double> freqs;
  for (double lam : wavelengths) {
    if (!(lam > 0.0) || pulse.relative_spectrum(2.0 * pi * c0 / lam) < 1e-2) {
      std::ostringstream os;
      os << "wavelength " << lam << " m is outside the source spectral support";
      throw ValidationError(os.str());
    }
    freqs.push_back(c0 / lam);
  }

  const Grid2D eps = build_permittivity(p.stack, p.schedule, p.domain, p.layout);
  const Grid2D eps_ref = build_permittivity(p.stack, {}, p.domain, p.layout);
  const RunOutput ref = simulate(eps_ref, p, freqs, opt);
  const RunOutput dev = simulate(eps, p, freqs, opt);

  GratingRunResult res;
  res.shutoff_converged = ref.stats.shutoff_converged && dev.stats.shutoff_converged;
  res.steps = dev.stats.steps;
  const double dx = p.domain.grid_step;
  const auto& idx = dev.idx;
  for (std::size_t f = 0; f < freqs.size(); ++f) {
    const double p_in = ref.data[0].flux(f);
    if (!(p_in > 0.0)) throw NumericalError("reference run injected no forward power");
    // forward/backward decomposition calibrated on the reference (forward-only) fields
    const auto profile = column_mode(eps_ref, idx.i_refl, wavelengths[f]).first;
    const auto [ref_e, ref_h] = project(ref.data[0], f, profile);
    const std::complex<double> impedance = ref_h / ref_e;
    const auto [dev_e, dev_h] = project(dev.data[0], f, profile);
    const std::complex<double> backward = 0.5 * (dev_e - dev_h / impedance);

    FluxReport r;
    r.frequency = freqs[f];
    r.reflected_fraction = std::norm(backward) / std::norm(ref_e);
    r.transmitted_fraction = dev.data[1].flux(f) / p_in;
    r.up_fraction = dev.data[2].flux(f) / p_in;
    r.down_fraction = -dev.data[3].flux(f) / p_in;
    res.reports.push_back(r);

    FieldMap2D fm;
    fm.frequency = freqs[f];
    fm.plane_position = (idx.k_up + 1) * dx;
    const auto& up = dev.data[2];
    const std::size_t n = up.points();
    const double scale = 1.0 / std::sqrt(p_in);
    for (std::size_t q = 0; q < n; ++q) {
      fm.coordinates.push_back((up.line.begin + q + 0.5) * dx);
      fm.amplitude.push_back(up.e[f * n + q] * scale);
    }
    res.upper_fields.push_back(std::move(fm));
  }
  return res;
}

double PhaseFit::local_angle_deg(double x) const {
  const double kx = c1 + 2.0 * c2 * (x - reference_x);
  return std::asin(std::clamp(kx / wavenumber, -1.0, 1.0)) / constants::deg;
}

PhaseFit fit_emission_phase(const FieldMap2D& field) {
  field.validate();
  const std::size_t n = field.coordinates.size();
  std::size_t peak = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (std::norm(field.amplitude[i]) > std::norm(field.amplitude[peak])) peak = i;
  const double floor = 0.05 * std::norm(field.amplitude[peak]);
  if (!(floor > 0.0)) throw NumericalError("phase fit of a zero field");
  std::size_t lo = peak, hi = peak;
  while (lo > 0 && std::norm(field.amplitude[lo - 1]) >= floor) --lo;
  while (hi + 1 < n && std::norm(field.amplitude[hi + 1]) >= floor) ++hi;
  if (hi - lo < 4) throw NumericalError("emitted beam too narrow for a phase fit");

  PhaseFit f;
  f.reference_x = field.coordinates[peak];
  f.lo = field.coordinates[lo];
  f.hi = field.coordinates[hi];
  f.wavenumber = 2.0 * pi / field.wavelength();
  Eigen::MatrixXd a(static_cast<long>(hi - lo + 1), 3);
  Eigen::VectorXd b(a.rows());
  double phase = std::arg(field.amplitude[lo]);
  for (std::size_t i = lo; i <= hi; ++i) {
    if (i > lo) phase += std::arg(field.amplitude[i] / field.amplitude[i - 1]);
    const double w = std::abs(field.amplitude[i]);
    const double u = field.coordinates[i] - f.reference_x;
    const long r = static_cast<long>(i - lo);
    a(r, 0) = w;
    a(r, 1) = w * u;
    a(r, 2) = w * u * u;
    b(r) = w * phase;
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
  f.c1 = c(1);
  f.c2 = c(2);
  return f;
}

AngleCalibration calibrate_design_angles(const LayerStack& stack, const grating::GratingSpec& spec,
                                         const grating::GuidedIndexModel& model, double grid_step,
                                         double tolerance_deg, int max_iterations, const FdtdOptions& options) {
  if (max_iterations < 1) throw ValidationError("calibration needs at least one iteration");
  spec.validate();
  const double target = spec.target_angle_deg;
  const double s_target = std::sin(target * constants::deg);
  AngleCalibration cal;
  cal.period_angle_deg.assign(static_cast<std::size_t>(spec.period_count), target);
  for (int i = 0; i < spec.period_count && i < static_cast<int>(spec.period_angle_deg.size()); ++i)
    cal.period_angle_deg[static_cast<std::size_t>(i)] = spec.period_angle_deg[static_cast<std::size_t>(i)];

  while (cal.iterations < max_iterations) {
    grating::GratingSpec s = spec;
    s.period_angle_deg = cal.period_angle_deg;
    cal.schedule = grating::build_schedule(s, model);
    const auto prob = make_problem(stack, cal.schedule, grid_step);
    const auto run = run_fdtd(prob, {spec.design_wavelength}, options);
    ++cal.iterations;
    const auto& field = run.upper_fields[0];
    cal.emitted_angle_deg = extract_diffraction_angle(field);
    const auto fit = fit_emission_phase(field);

    // period centers seen on the monitor after walk-off through the gap
    const double gap = field.plane_position - (prob.layout.stack_base_z + stack.finite_thickness());
    const double walk = gap * std::tan(target * constants::deg);
    double x = prob.layout.grating_start_x;
    cal.max_local_error_deg = 0.0;
    std::vector<double> next = cal.period_angle_deg;
    for (std::size_t i = 0; i < cal.schedule.periods.size(); ++i) {
      const double pitch = cal.schedule.periods[i].pitch;
      const double xm = std::clamp(x + 0.5 * pitch + walk, fit.lo, fit.hi);
      x += pitch;
      const double local = fit.local_angle_deg(xm);
      cal.max_local_error_deg = std::max(cal.max_local_error_deg, std::abs(local - target));
      const double step = std::clamp(s_target - std::sin(local * constants::deg), -0.05, 0.05);
      const double si = std::sin(cal.period_angle_deg[i] * constants::deg) + step;
      next[i] = std::asin(std::clamp(si, -0.99, 0.99)) / constants::deg;
    }
    if (cal.max_local_error_deg <= tolerance_deg && std::abs(cal.emitted_angle_deg - target) <= tolerance_deg) {
      cal.converged = true;
      break;
    }
    cal.period_angle_deg = std::move(next);
  }
  return cal;
}

double extract_diffraction_angle(const FieldMap2D& field, double medium_index) {
  field.validate();
  const std::size_t n = field.coordinates.size();
  if (n < 8) throw ValidationError("field map too short for angle extraction");
  const double dx = (field.coordinates.back() - field.coordinates.front()) / static_cast<double>(n - 1);
  const double k0 = 2.0 * pi * medium_index / field.wavelength();

  // zero-padded FFT for a coarse peak, then golden-section refinement on the exact DTFT
  std::size_t nfft = 1;
  while (nfft < 16 * n) nfft <<= 1;
  fftw_complex* buf = fftw_alloc_complex(nfft);
  std::unique_lock planner_lock(fftw_planner_mutex());
  fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(nfft), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  planner_lock.unlock();
  for (std::size_t i = 0; i < nfft; ++i) {
    buf[i][0] = i < n ? field.amplitude[i].real() : 0.0;
    buf[i][1] = i < n ? field.amplitude[i].imag() : 0.0;
  }
  fftw_execute(plan);
  // FFTW forward uses exp(-i k x); a field exp(+i kx x) peaks at +kx
  double best = -1.0, total = 0.0, propagating = 0.0;
  long best_bin = 0;
  for (std::size_t i = 0; i < nfft; ++i) {
    const long bin = i < nfft / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(nfft);
    const double kx = 2.0 * pi * static_cast<double>(bin) / (static_cast<double>(nfft) * dx);
    const double pw = buf[i][0] * buf[i][0] + buf[i][1] * buf[i][1];
    total += pw;
    if (std::abs(kx) <= k0) {
      propagating += pw;
      if (pw > best) {
        best = pw;
        best_bin = bin;
      }
    }
  }
  planner_lock.lock();
  fftw_destroy_plan(plan);
  fftw_free(buf);
  if (!(total > 0.0) || propagating < 0.5 * total)
    throw NumericalError("no propagating spectral peak: field is evanescent-dominated");

  auto dtft_power = [&](double kx) {
    std::complex<double> s{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) s += field.amplitude[i] * std::polar(1.0, -kx * (field.coordinates[i] - field.coordinates[0]));
    return std::norm(s);
  };
  const double dk = 2.0 * pi / (static_cast<double>(nfft) * dx);
  double a = (best_bin - 1) * dk, b = (best_bin + 1) * dk;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = dtft_power(c), fd = dtft_power(d);
  for (int it = 0; it < 80; ++it) {
    if (fc > fd) {
      b = d; d = c; fd = fc; c = b - gr * (b - a); fc = dtft_power(c);
    } else {
      a = c; c = d; fc = fd; d = a + gr * (b - a); fd = dtft_power(d);
    }
  }
  const double kx = 0.5 * (a + b);
  return std::asin(std::clamp(kx / k0, -1.0, 1.0)) / constants::deg;
}

}  // namespace hprobe::fdtd
