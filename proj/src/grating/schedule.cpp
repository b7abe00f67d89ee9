#include "hprobe/grating/schedule.hpp"

#include <cmath>
#include <sstream>

#include "hprobe/core/constants.hpp"
#include "hprobe/core/csv.hpp"
#include "hprobe/core/error.hpp"
#include "hprobe/grating/slab_mode.hpp"

namespace hprobe::grating {

void GratingSpec::validate() const {
  if (!(lattice_constant_a > 0.0)) throw ValidationError("lattice constant must be positive");
  if (!(lattice_constant_a < design_wavelength))
    throw ValidationError("lattice constant must be subwavelength (a < lambda)");
  if (period_count < 1) throw ValidationError("period_count must be >= 1");
  if (!(duty_cycle > 0.0 && duty_cycle < 1.0)) throw ValidationError("duty_cycle must be in (0,1)");
  if (!(n_fill >= 1.0) || !(n_si > n_fill)) throw ValidationError("need 1 <= n_fill < n_si");
  require_in_range(target_angle_deg, -89.0, 89.0, "target_angle_deg");
  if (!(waveguide_width_wy > 0.0)) throw ValidationError("waveguide width must be positive");
  if (!period_angle_deg.empty() && period_angle_deg.size() < static_cast<std::size_t>(period_count))
    throw ValidationError("period_angle_deg must cover every period");
  for (double a : period_angle_deg) require_in_range(a, -89.0, 89.0, "period_angle_deg");
}

double GratingSpec::design_angle(int period) const {
  return period_angle_deg.empty() ? target_angle_deg : period_angle_deg.at(static_cast<std::size_t>(period));
}

double ApodizationSchedule::total_length() const {
  double l = 0.0;
  for (const auto& p : periods) l += p.pitch;
  return l;
}

void ApodizationSchedule::validate(double a) const {
  for (std::size_t i = 0; i < periods.size(); ++i) {
    const auto& p = periods[i];
    if (!(p.pitch > 0.0) || !(p.hole_diameter >= 0.0 && p.hole_diameter < a) ||
        !(p.duty_cycle > 0.0 && p.duty_cycle < 1.0) || !(p.index >= 1.0)) {
      std::ostringstream os;
      os << "invalid schedule record at period " << i + 1;
      throw ValidationError(os.str());
    }
  }
}

GuidedIndexModel slab_guided_model(double thickness, double wavelength, double n_sub, double n_clad) {
  return [=](double n) { return slab_modal_index(n, thickness, wavelength, n_sub, n_clad); };
}

double period_material_index(double swg_index, double n_si, double duty) {
  return std::sqrt(duty * swg_index * swg_index + (1.0 - duty) * n_si * n_si);
}

double phase_matched_pitch(double modal_index, double wavelength, double angle_deg) {
  const double denom = modal_index - std::sin(angle_deg * constants::deg);
  if (!(denom > 0.0)) throw ValidationError("no first-order phase match for this angle");
  return wavelength / denom;
}

ApodizationSchedule build_schedule(const GratingSpec& spec, const GuidedIndexModel& model,
                                   const MixingRule& rule) {
  spec.validate();
  ApodizationSchedule s;
  double max_mode = 0.0;
  for (int i = 0; i < spec.period_count; ++i) {
    const double n_i = spec.first_period_index_n1 + i * spec.index_step_dn;
    if (!(n_i > 1.0 && n_i <= spec.n_si)) {
      std::ostringstream os;
      os << "apodization leaves physical range at period " << i + 1 << ": n_i = " << n_i;
      throw ValidationError(os.str());
    }
    double n_mode = 0.0;
    try {
      n_mode = model(period_material_index(n_i, spec.n_si, spec.duty_cycle));
    } catch (const Error& e) {
      std::ostringstream os;
      os << "apodization period " << i + 1 << " has no guided mode: " << e.what();
      throw ValidationError(os.str());
    }
    max_mode = std::max(max_mode, n_mode);
    PeriodRecord rec;
    rec.index = n_i;
    rec.pitch = phase_matched_pitch(n_mode, spec.design_wavelength, spec.design_angle(i));
    try {
      rec.hole_diameter = spec.lattice_constant_a * hole_ratio_for_index(n_i, spec.n_si, spec.n_fill, rule);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "apodization leaves physical range at period " << i + 1 << ": " << e.what();
      throw ValidationError(os.str());
    }
    rec.duty_cycle = spec.duty_cycle;
    s.periods.push_back(rec);
  }
  if (!(spec.lattice_constant_a < spec.design_wavelength / max_mode)) {
    std::ostringstream os;
    os << "lattice constant " << spec.lattice_constant_a << " m is not subwavelength for modal index "
       << max_mode;
    throw ValidationError(os.str());
  }
  s.validate(spec.lattice_constant_a);
  return s;
}

void write_schedule_csv(const std::filesystem::path& path, const ApodizationSchedule& s) {
  csv::Table t;
  t.header = {"period", "n_i", "pitch_m", "hole_diameter_m", "duty"};
  for (std::size_t i = 0; i < s.periods.size(); ++i) {
    const auto& p = s.periods[i];
    t.rows.push_back({std::to_string(i + 1), csv::format_double(p.index), csv::format_double(p.pitch),
                      csv::format_double(p.hole_diameter), csv::format_double(p.duty_cycle)});
  }
  csv::write(path, t);
}

ApodizationSchedule read_schedule_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto n = csv::column(t, "n_i");
  const auto pitch = csv::column(t, "pitch_m");
  const auto d = csv::column(t, "hole_diameter_m");
  const auto duty = csv::column(t, "duty");
  ApodizationSchedule s;
  for (std::size_t i = 0; i < n.size(); ++i) s.periods.push_back({n[i], pitch[i], d[i], duty[i]});
  return s;
}

}  // namespace hprobe::grating
