#pragma once

#include <complex>
#include <vector>

#include "hprobe/fdtd/geometry.hpp"
#include "hprobe/fdtd/simulation.hpp"
#include "hprobe/grating/schedule.hpp"

namespace hprobe::fdtd {

// Complex field sampled along a line z = plane_position.
struct FieldMap2D {
  double plane_position = 0.0;
  std::vector<double> coordinates;                 // strictly increasing, m
  std::vector<std::complex<double>> amplitude;     // arbitrary common scale
  double frequency = 0.0;                          // Hz

  void validate() const;
  double wavelength() const;
};

struct FluxReport {
  double up_fraction = 0.0;
  double down_fraction = 0.0;
  double reflected_fraction = 0.0;
  double transmitted_fraction = 0.0;
  double frequency = 0.0;

  double wavelength() const;
  double closure() const { return up_fraction + down_fraction + reflected_fraction + transmitted_fraction; }
};

struct SourceSpec {
  double center_wavelength = 1536e-9;
  double bandwidth = 200e-9;
  double amplitude = 1.0;
};

struct GratingProblem {
  LayerStack stack;
  grating::ApodizationSchedule schedule;
  SimDomain domain;
  GratingLayout layout;
  SourceSpec source;
};

// Problem with an automatically sized domain.
GratingProblem make_problem(const LayerStack& stack, const grating::ApodizationSchedule& schedule,
                            double grid_step = 20e-9, int pml_cells = 10, double courant = 0.5);

struct FdtdOptions {
  bool parallel = true;
};

struct GratingRunResult {
  std::vector<FluxReport> reports;         // one per requested wavelength
  std::vector<FieldMap2D> upper_fields;    // aligned with reports
  bool shutoff_converged = true;           // false = at least one run hit max_steps
  long steps = 0;
};

// Grating run plus a straight-waveguide reference run for normalization. All wavelengths
// come from one broadband time-domain run.
GratingRunResult run_fdtd(const GratingProblem& problem, const std::vector<double>& wavelengths,
                          const FdtdOptions& options = {});

inline GratingRunResult frequency_sweep(const GratingProblem& problem,
                                        const std::vector<double>& wavelengths,
                                        const FdtdOptions& options = {}) {
  return run_fdtd(problem, wavelengths, options);
}

// Emission angle (degrees from the surface normal, positive along +x) from the peak of
// the spatial-frequency spectrum of the field.
double extract_diffraction_angle(const FieldMap2D& field, double medium_index = 1.0);

// Local emission angle along the upper monitor from a weighted quadratic fit of the
// unwrapped phase (weights = intensity, samples above 5% of the peak).
struct PhaseFit {
  double reference_x = 0.0;   // expansion point (intensity peak), m
  double c1 = 0.0, c2 = 0.0;  // phase = c0 + c1 u + c2 u^2, u = x - reference_x
  double lo = 0.0, hi = 0.0;  // fitted x-range
  double wavenumber = 0.0;    // free-space k0
  double local_angle_deg(double x) const;
};
PhaseFit fit_emission_phase(const FieldMap2D& field);

// Per-period design angles that make the simulated emission angle uniform and equal to
// the target. The phase-matching model misses the band-edge bending of the Bloch index
// in strongly modulated periods, so design angles are corrected from the local emission
// angle of the FDTD field and the schedule is rebuilt until it converges.
struct AngleCalibration {
  std::vector<double> period_angle_deg;
  double emitted_angle_deg = 0.0;   // spectral-peak angle of the final schedule
  double max_local_error_deg = 0.0; // worst local deviation inside the fitted beam
  int iterations = 0;
  bool converged = false;
  grating::ApodizationSchedule schedule;
};

AngleCalibration calibrate_design_angles(const LayerStack& stack, const grating::GratingSpec& spec,
                                         const grating::GuidedIndexModel& model, double grid_step = 20e-9,
                                         double tolerance_deg = 0.25, int max_iterations = 6,
                                         const FdtdOptions& options = {});

// Fundamental mode of one grid column at the given frequency: (profile, modal index).
std::pair<std::vector<double>, double> column_mode(const Grid2D& eps, std::size_t i, double wavelength);

}  // namespace hprobe::fdtd
