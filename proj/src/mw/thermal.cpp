#include "hprobe/mw/thermal.hpp"

#include <cmath>
#include <sstream>

#include "hprobe/core/csv.hpp"
#include "hprobe/core/error.hpp"

namespace hprobe::mw {

LossBudget insertion_loss_budget(const std::vector<std::pair<std::string, double>>& segments) {
  LossBudget b;
  for (const auto& [label, db] : segments) {
    if (!(db >= 0.0)) throw ValidationError("loss for segment '" + label + "' must be >= 0 dB");
    b.total_db += db;
  }
  b.transmission = std::pow(10.0, -b.total_db / 10.0);
  return b;
}

void ThermalModel::validate() const {
  if (!(slope_mk_per_mw >= 0.0)) throw ValidationError("heating slope must be >= 0");
  if (!(stage_cooling_power > 0.0)) throw ValidationError("stage cooling power must be > 0");
}

HeatingResult heating(const ThermalModel& m, double p_mw) {
  m.validate();
  if (!(p_mw >= 0.0)) throw ValidationError("average power must be >= 0");
  HeatingResult h;
  h.rise_mk = m.slope_mk_per_mw * p_mw;
  h.naive_bound_mk = p_mw / m.stage_cooling_power;
  h.temperature_mk = m.base_temperature + h.rise_mk;
  return h;
}

DutyCycle duty_cycle_power(const spin::PulseSequence& s, double peak_power_w) {
  s.validate();
  if (!(peak_power_w >= 0.0)) throw ValidationError("peak power must be >= 0");
  const double on = s.on_time();
  if (on > s.repetition_period) {
    std::ostringstream os;
    os << "MW on-time " << on << " s exceeds the repetition period " << s.repetition_period << " s";
    throw ValidationError(os.str());
  }
  DutyCycle d;
  d.duty = on / s.repetition_period;
  d.average_power_mw = peak_power_w * d.duty * 1e3;
  return d;
}

std::string format_budget(const std::vector<std::pair<std::string, double>>& segments, const LossBudget& b) {
  std::ostringstream os;
  for (const auto& [label, db] : segments) os << label << "_db = " << csv::format_double(db) << "\n";
  os << "total_db = " << csv::format_double(b.total_db) << "\n"
     << "transmission = " << csv::format_double(b.transmission) << "\n";
  return os.str();
}

}  // namespace hprobe::mw
