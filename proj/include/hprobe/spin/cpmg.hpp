#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "hprobe/spin/bloch.hpp"

namespace hprobe::spin {

// Gaussian dephasing bath acting as a detuning delta(t) in Hz.
struct NoiseBath {
  enum class Kind { ornstein_uhlenbeck, power_law, quasi_static };
  Kind kind = Kind::ornstein_uhlenbeck;
  double sigma = 1.6e5;             // rms detuning, Hz
  double correlation_time = 10e-3;  // OU only, s
  double spectral_exponent = 2.883; // power law S(w) ~ w^-s
  double low_cutoff = 0.01;         // power-law band edges, Hz
  double high_cutoff = 1e7;
  int modes_per_decade = 400;       // power-law Fourier series density
  std::uint64_t seed = 1;

  void validate() const;
  // One-sided density of delta in Hz^2 per (rad/s); integrates to sigma^2.
  double spectral_density(double omega) const;
};

struct CoherenceTrace {
  std::vector<double> evolution_times;
  std::vector<double> coherence;
  std::vector<double> standard_error;
  int pulse_count = 0;
  int trajectories = 0;
  std::string warning;  // set when the target standard error was not reached
};

struct CpmgOptions {
  int trajectories = 2000;
  double target_standard_error = 0.02;
};

// Free-evolution segments of an N-pulse CPMG sequence with pulses at (j - 1/2) T / N.
// Returns segment boundaries (N + 2 values from 0 to T); the toggling sign starts at +1.
std::vector<double> cpmg_boundaries(int pulse_count, double total_time);

// Fourier transform of the toggling function, int y(t) exp(i w t) dt.
std::complex<double> toggling_spectrum(int pulse_count, double total_time, double omega);

// Monte Carlo <cos phi> over bath trajectories.
CoherenceTrace cpmg_coherence(const SpinSystem& spin, const NoiseBath& bath, int pulse_count,
                              const std::vector<double>& total_times, const CpmgOptions& options = {});

// Gaussian filter-function decay chi with coherence exp(-chi).
double filter_function_decay(const NoiseBath& bath, int pulse_count, double total_time);

// T at which the filter-function coherence equals 1/e.
double oracle_t2(const NoiseBath& bath, int pulse_count);

struct StretchedExponential {
  double t2 = 0.0;
  double beta = 0.0;
  int points_used = 0;
};

// Fit C = exp(-(T/T2)^beta) by regression of ln(-ln C) on ln T over C in [lo, hi].
StretchedExponential fit_stretched_exponential(const CoherenceTrace& trace, double lo = 0.05, double hi = 0.95);

struct PowerLawFit {
  double amplitude = 0.0;  // A
  double exponent = 0.0;   // alpha
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();  // of (ln A, alpha)
  double amplitude_sigma = 0.0;
  double exponent_sigma = 0.0;
};

// Least squares of ln T2 = ln A + alpha ln N.
PowerLawFit fit_t2_power_law(const std::vector<double>& n_values, const std::vector<double>& t2_values);

// Decoupling exponent alpha from oracle T2 values at the given pulse counts.
double oracle_alpha(const NoiseBath& bath, const std::vector<int>& pulse_counts);

// Power-law spectral exponent whose oracle alpha equals `alpha`.
double power_law_exponent_for_alpha(double alpha, NoiseBath bath, const std::vector<int>& pulse_counts);

}  // namespace hprobe::spin
