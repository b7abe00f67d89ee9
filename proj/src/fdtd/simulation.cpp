#include "hprobe/fdtd/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hprobe/core/constants.hpp"
#include "hprobe/core/error.hpp"

namespace hprobe::fdtd {

using constants::c0;
using constants::pi;

GaussianPulse GaussianPulse::from_band(double center_wavelength, double bandwidth) {
  // bandwidth is the FWHM of the power spectrum, expressed in wavelength
  const double df = c0 * bandwidth / (center_wavelength * center_wavelength);
  GaussianPulse g;
  g.omega0 = 2.0 * pi * c0 / center_wavelength;
  g.tau = 2.0 * std::sqrt(2.0 * std::log(2.0)) / (2.0 * pi * df);
  g.t0 = 4.0 * g.tau;
  return g;
}

double GaussianPulse::operator()(double t) const {
  const double u = (t - t0) / tau;
  return std::exp(-u * u) * std::sin(omega0 * (t - t0));
}

double GaussianPulse::relative_spectrum(double omega) const {
  const double d = 0.5 * (omega - omega0) * tau;
  return std::exp(-d * d);
}

double MonitorData::flux(std::size_t f) const {
  const std::size_t n = points();
  double s = 0.0;
  for (std::size_t p = 0; p < n; ++p) s += std::real(e[f * n + p] * std::conj(h[f * n + p]));
  const double sign = line.orientation == MonitorLine::Orientation::vertical ? 1.0 : -1.0;
  return 0.5 * sign * s;
}

Simulation::Simulation(Grid2D eps, const SimDomain& domain, SimulationOptions options)
    : eps_(std::move(eps)),
      domain_(domain),
      options_(options),
      fields_(eps_.nx, eps_.nz, static_cast<std::size_t>(domain.pml_cells)) {
  if (!options_.skip_validation) domain_.validate();
  if (eps_.nx != domain_.nx() || eps_.nz != domain_.nz())
    throw ValidationError("permittivity grid does not match the domain");
  for (double e : eps_.data)
    if (!(e >= 1.0)) throw ValidationError("relative permittivity must be >= 1");
  inv_eps_.resize(eps_.data.size());
  std::transform(eps_.data.begin(), eps_.data.end(), inv_eps_.begin(), [](double e) { return 1.0 / e; });
  const double s = domain_.courant_factor;
  const auto cells = static_cast<std::size_t>(domain_.pml_cells);
  px_ = make_cpml_axis(eps_.nx, cells, s);
  pz_ = make_cpml_axis(eps_.nz, cells, s);
  ctx_ = KernelContext{&inv_eps_, &px_, &pz_, s};
  dt_ = s * domain_.grid_step / c0;
}

void Simulation::set_line_source(std::size_t i, std::vector<double> profile, GaussianPulse pulse,
                                 double amplitude) {
  if (i == 0 || i + 1 >= eps_.nx || profile.size() != eps_.nz)
    throw ValidationError("source column or profile size out of range");
  source_i_ = i;
  source_profile_ = std::move(profile);
  pulse_ = pulse;
  amplitude_ = amplitude;
  has_source_ = true;
}

std::size_t Simulation::add_monitor(const MonitorLine& line, const std::vector<double>& freqs) {
  const bool vertical = line.orientation == MonitorLine::Orientation::vertical;
  const std::size_t along = vertical ? eps_.nz : eps_.nx;
  const std::size_t across = vertical ? eps_.nx : eps_.nz;
  if (line.index + 1 >= across || line.end > along || line.begin >= line.end)
    throw ValidationError("monitor line outside the grid");
  MonitorData m;
  m.line = line;
  m.frequencies = freqs;
  m.e.assign(freqs.size() * m.points(), {0.0, 0.0});
  m.h.assign(freqs.size() * m.points(), {0.0, 0.0});
  monitors_.push_back(std::move(m));
  return monitors_.size() - 1;
}

void Simulation::sample_monitors(long step) {
  // E has just been advanced to (step+1) dt, H sits at (step+1/2) dt
  const double te = (step + 1) * dt_;
  const double th = (step + 0.5) * dt_;
  const std::size_t nx = eps_.nx;
  const auto& ey = fields_.ey;
  for (auto& m : monitors_) {
    const std::size_t n = m.points();
    const bool vertical = m.line.orientation == MonitorLine::Orientation::vertical;
    for (std::size_t f = 0; f < m.frequencies.size(); ++f) {
      const double w = 2.0 * pi * m.frequencies[f];
      const std::complex<double> pe = std::polar(static_cast<double>(dft_stride_), w * te);
      const std::complex<double> ph = std::polar(static_cast<double>(dft_stride_), w * th);
      std::complex<double>* ae = m.e.data() + f * n;
      std::complex<double>* ah = m.h.data() + f * n;
      for (std::size_t p = 0; p < n; ++p) {
        const std::size_t j = m.line.begin + p;
        double ev, hv;
        if (vertical) {
          const std::size_t at = j * nx + m.line.index;
          ev = 0.5 * (ey[at] + ey[at + 1]);
          hv = fields_.hz[at];
        } else {
          const std::size_t at = m.line.index * nx + j;
          ev = 0.5 * (ey[at] + ey[at + nx]);
          hv = fields_.hx[at];
        }
        ae[p] += ev * pe;
        ah[p] += hv * ph;
      }
    }
  }
}

RunStats Simulation::run() {
  RunStats stats;
  // DFT stride: at least 10 samples per period of the highest monitored frequency
  double fmax = 0.0;
  for (const auto& m : monitors_)
    for (double f : m.frequencies) fmax = std::max(fmax, f);
  dft_stride_ = fmax > 0.0 ? std::max(1, static_cast<int>(1.0 / (10.0 * fmax * dt_))) : 1;

  const double source_end = has_source_ ? pulse_.end_time() : 0.0;
  const std::size_t nx = eps_.nx;
  double peak = 0.0;
  for (long n = 0; n < domain_.max_steps; ++n) {
    if (options_.parallel) {
      update_h_omp(fields_, ctx_);
      update_e_omp(fields_, ctx_);
    } else {
      update_h_serial(fields_, ctx_);
      update_e_serial(fields_, ctx_);
    }
    const double t = (n + 1) * dt_;
    if (has_source_ && t <= source_end) {
      const double g = amplitude_ * pulse_(t);
      // a current J ~ profile enters E through 1/eps; injecting the profile itself would radiate
      for (std::size_t k = 0; k < eps_.nz; ++k)
        fields_.ey[k * nx + source_i_] += g * source_profile_[k] * inv_eps_[k * nx + source_i_];
    }
    if (n % dft_stride_ == 0) sample_monitors(n);
    stats.steps = n + 1;
    if ((n + 1) % options_.energy_interval == 0) {
      const double u = fields_.energy(eps_.data);
      if (options_.record_energy) stats.energy_trace.emplace_back(n + 1, u);
      if (!std::isfinite(u) || (t > source_end && peak > 0.0 && u > 10.0 * peak)) {
        std::ostringstream os;
        os << "FDTD field norm diverged at step " << n + 1 << "; courant_factor "
           << domain_.courant_factor << " exceeds the 2D stability bound 1/sqrt(2)";
        throw NumericalError(os.str());
      }
      if (t <= source_end) peak = std::max(peak, u);
      if (t > source_end && u > peak) peak = std::max(peak, u);
      stats.final_energy = u;
      if (t > source_end && u < domain_.shutoff_threshold * peak) {
        stats.shutoff_converged = true;
        break;
      }
    }
  }
  stats.peak_energy = peak;
  return stats;
}

}  // namespace hprobe::fdtd
