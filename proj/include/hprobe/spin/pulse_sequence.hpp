#pragma once

namespace hprobe::spin {

struct PulseSequence {
  enum class Kind { rabi, ramsey, cpmg };
  Kind kind = Kind::cpmg;
  int pi_pulse_count = 1;
  double pi_duration = 78e-9;
  double pulse_peak_power = 17.8;
  double total_evolution_time = 0.0;
  double repetition_period = 36e-3;

  void validate() const;
  // MW on-time per repetition: N pi pulses for CPMG, one pi-equivalent otherwise.
  double on_time() const;
};

}  // namespace hprobe::spin
