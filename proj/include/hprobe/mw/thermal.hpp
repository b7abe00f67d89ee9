#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hprobe/spin/pulse_sequence.hpp"

namespace hprobe::mw {

struct LossBudget {
  double total_db = 0.0;
  double transmission = 1.0;  // linear power factor
};

LossBudget insertion_loss_budget(const std::vector<std::pair<std::string, double>>& segments);

struct ThermalModel {
  double slope_mk_per_mw = 3.6;
  double base_temperature = 0.0;       // mK
  double stage_cooling_power = 0.07;   // mW/mK

  void validate() const;
};

struct HeatingResult {
  double rise_mk = 0.0;
  double naive_bound_mk = 0.0;  // power / stage cooling power
  double temperature_mk = 0.0;  // base + rise
};

HeatingResult heating(const ThermalModel& model, double average_power_mw);

struct DutyCycle {
  double duty = 0.0;
  double average_power_mw = 0.0;
};

DutyCycle duty_cycle_power(const spin::PulseSequence& sequence, double peak_power_w);

std::string format_budget(const std::vector<std::pair<std::string, double>>& segments, const LossBudget& b);

}  // namespace hprobe::mw
