#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "hprobe/fdtd/geometry.hpp"
#include "hprobe/fdtd/kernels.hpp"

namespace hprobe::fdtd {

// exp(-((t - t0)/tau)^2) * sin(omega0 (t - t0)), SI units.
struct GaussianPulse {
  double omega0 = 0.0;
  double tau = 0.0;
  double t0 = 0.0;

  static GaussianPulse from_band(double center_wavelength, double bandwidth);
  double operator()(double t) const;
  // |spectrum(omega)| / |spectrum(omega0)|.
  double relative_spectrum(double omega) const;
  double end_time() const { return 2.0 * t0; }
};

// A line of monitor points. Vertical lines sit on an Hz column (between Ey columns
// `index` and `index + 1`); horizontal lines sit on an Hx row (between Ey rows).
struct MonitorLine {
  enum class Orientation { vertical, horizontal };
  Orientation orientation = Orientation::vertical;
  std::size_t index = 0;
  std::size_t begin = 0;  // first Ey node along the line
  std::size_t end = 0;    // one past the last
};

struct MonitorData {
  MonitorLine line;
  std::vector<double> frequencies;  // Hz
  // Phasors use exp(+i omega t), so a +x travelling wave reads exp(+i k x).
  // [f * npts + p]; E is the Ey interpolated onto the line, H is Hz (vertical) or Hx (horizontal).
  std::vector<std::complex<double>> e, h;
  std::size_t points() const { return line.end - line.begin; }
  // Time-averaged power crossing the line per unit y-length (grid units), +x or +z positive.
  double flux(std::size_t f) const;
};

struct SimulationOptions {
  bool parallel = true;
  bool skip_validation = false;  // only for exercising the instability path
  int energy_interval = 100;
  bool record_energy = false;
};

struct RunStats {
  long steps = 0;
  bool shutoff_converged = false;
  double peak_energy = 0.0;
  double final_energy = 0.0;
  std::vector<std::pair<long, double>> energy_trace;
};

class Simulation {
 public:
  Simulation(Grid2D eps, const SimDomain& domain, SimulationOptions options = {});

  // Soft E_y source along Ey column i (one value per z-node).
  void set_line_source(std::size_t i, std::vector<double> profile, GaussianPulse pulse, double amplitude = 1.0);
  std::size_t add_monitor(const MonitorLine& line, const std::vector<double>& frequencies);

  RunStats run();

  const MonitorData& monitor(std::size_t id) const { return monitors_.at(id); }
  const Grid2D& permittivity() const { return eps_; }
  const FieldState& fields() const { return fields_; }
  double dt() const { return dt_; }

 private:
  void sample_monitors(long step);

  Grid2D eps_;
  SimDomain domain_;
  SimulationOptions options_;
  std::vector<double> inv_eps_;
  CpmlAxis px_, pz_;
  FieldState fields_;
  KernelContext ctx_;
  double dt_ = 0.0;  // seconds

  std::size_t source_i_ = 0;
  std::vector<double> source_profile_;
  GaussianPulse pulse_;
  double amplitude_ = 0.0;
  bool has_source_ = false;

  std::vector<MonitorData> monitors_;
  int dft_stride_ = 1;
};

}  // namespace hprobe::fdtd
