#include "hprobe/spin/pulse_sequence.hpp"

#include "hprobe/core/error.hpp"

namespace hprobe::spin {

void PulseSequence::validate() const {
  if (kind == Kind::cpmg && pi_pulse_count < 1) throw ValidationError("CPMG needs at least one pi pulse");
  if (pi_pulse_count < 0) throw ValidationError("pi_pulse_count must be >= 0");
  if (!(pi_duration >= 0.0)) throw ValidationError("pi_duration must be >= 0");
  if (!(pulse_peak_power >= 0.0)) throw ValidationError("pulse_peak_power must be >= 0");
  if (!(repetition_period > 0.0)) throw ValidationError("repetition_period must be > 0");
  if (total_evolution_time < 0.0) throw ValidationError("total_evolution_time must be >= 0");
}

double PulseSequence::on_time() const {
  return kind == Kind::cpmg ? pi_pulse_count * pi_duration : (pi_pulse_count > 0 ? pi_duration : 0.0);
}

}  // namespace hprobe::spin
