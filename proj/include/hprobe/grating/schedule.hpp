#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "hprobe/grating/effective_index.hpp"

namespace hprobe::grating {

// Linear-apodized SWG grating description. Lengths in meters, angles in degrees.
struct GratingSpec {
  double lattice_constant_a = 215e-9;
  double n_si = 3.48;
  double n_fill = 1.0;
  double first_period_index_n1 = 3.05;
  double index_step_dn = -0.054;
  int period_count = 20;
  double duty_cycle = 0.5;
  double design_wavelength = 1536e-9;
  double target_angle_deg = 11.3;
  double waveguide_width_wy = 12.6e-6;
  // Optional per-period design angles (degrees) replacing target_angle_deg in the
  // phase-matching condition; filled by the FDTD angle calibration.
  std::vector<double> period_angle_deg;

  void validate() const;
  double design_angle(int period) const;
};

struct PeriodRecord {
  double index = 0.0;          // n_i of the SWG segment
  double pitch = 0.0;          // Lambda_i, m
  double hole_diameter = 0.0;  // d_i, m
  double duty_cycle = 0.0;     // SWG fraction of the pitch
};

struct ApodizationSchedule {
  std::vector<PeriodRecord> periods;

  double total_length() const;
  bool empty() const { return periods.empty(); }
  void validate(double lattice_constant) const;
};

// Modal index of the device layer as a function of its (homogenized) material index.
using GuidedIndexModel = std::function<double(double material_index)>;

GuidedIndexModel slab_guided_model(double thickness, double wavelength, double substrate_index,
                                   double cladding_index);

// Homogenized index of one period for E parallel to the segment interfaces.
double period_material_index(double swg_index, double n_si, double duty_cycle);

// Phase-matched pitch: pitch * (n_mode - sin(theta)) = wavelength.
double phase_matched_pitch(double modal_index, double wavelength, double angle_deg);

ApodizationSchedule build_schedule(const GratingSpec& spec, const GuidedIndexModel& model,
                                   const MixingRule& rule = permittivity_mixing());

void write_schedule_csv(const std::filesystem::path& path, const ApodizationSchedule& s);
ApodizationSchedule read_schedule_csv(const std::filesystem::path& path);

}  // namespace hprobe::grating
