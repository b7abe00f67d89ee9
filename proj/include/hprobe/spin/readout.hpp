#pragma once

#include <cstdint>
#include <vector>

namespace hprobe::spin {

// Placeholder optical readout parameters; none of these are measured values.
struct ReadoutParams {
  int cycles_per_transition = 50;      // excitation cycles per A or B block
  double photons_per_excitation = 0.5; // emitted into the collection path on the bright transition
  double detection_efficiency = 0.1;
  double dark_rate = 20.0;             // counts/s
  double cycle_duration = 20e-6;       // s per excitation cycle
  double spin_flip_probability = 0.0;  // per excitation cycle
  double initial_up_probability = 0.5;
  bool reinitialize_each_window = false;  // independent shots when true

  void validate() const;
  double block_duration() const { return cycles_per_transition * cycle_duration; }
  double window_duration() const { return 2.0 * block_duration(); }
  double bright_mean() const;  // mean counts in a bright block
  double dark_mean() const;    // mean counts in a dark block
};

// One readout window is an A block followed by a B block. The spin state of a window is
// the state at its start.
struct PhotonTrace {
  std::vector<double> time_bins;  // window start times, s
  std::vector<int> counts_A;
  std::vector<int> counts_B;
  std::vector<bool> true_state_up;
};

PhotonTrace readout_monte_carlo(const ReadoutParams& params, double duration, std::uint64_t seed);

struct Classification {
  std::vector<bool> estimate_up;
  double fidelity = 0.0;
};

// Up when counts_A - counts_B >= threshold.
Classification classify_state(const PhotonTrace& trace, int threshold);

// Two-Poisson discrimination for flip-free windows with equal priors:
// 0.5 [P(D >= t | up) + P(D < t | down)], D = A - B.
double poisson_discrimination_fidelity(double bright_mean, double dark_mean, int threshold);

// Threshold maximising the closed-form fidelity over [0, range].
int optimal_threshold(double bright_mean, double dark_mean, int range = 50);

}  // namespace hprobe::spin
