#pragma once

#include <complex>
#include <filesystem>
#include <functional>
#include <vector>

namespace hprobe::spectra {

struct CavitySpec {
  double resonance_wavelength = 1536e-9;
  double quality_factor = 6e4;
  double coupling_ratio = 0.5;  // kappa_in / kappa

  void validate() const;
  double linewidth() const { return resonance_wavelength / quality_factor; }
};

// Grating/cavity Fabry-Perot. The grating is a passive two-port: waveguide-side field
// reflectivity sqrt(R_GC) and fiber-to-waveguide power transmission eta, which requires
// eta <= 1 - sqrt(R_GC). Direct fiber-side reflection of the grating is neglected.
struct FringeSpec {
  std::function<double(double wavelength)> gc_reflectivity = [](double) { return 0.0; };
  double path_length = 185e-6;
  double group_index = 4.0;
  double coupling_efficiency = 1.0;

  void validate(double wavelength) const;
};

struct ReflectionSpectrum {
  std::vector<double> wavelengths;
  std::vector<double> reflectance;

  void validate() const;
};

// One-port field reflection 1 - 2 rho / (1 + i x), x = 2 Q (lambda0 / lambda - 1).
std::complex<double> cavity_amplitude(const CavitySpec& cavity, double wavelength);
double cavity_reflectance(const CavitySpec& cavity, double wavelength);

ReflectionSpectrum fringe_spectrum(const FringeSpec& fringes, const CavitySpec& cavity,
                                   const std::vector<double>& wavelengths);

// Free spectral range lambda^2 / (2 n_g L).
double fringe_period(double wavelength, double group_index, double path_length);

// Mean spacing of local maxima (parabolic refinement) within [lo, hi].
double measure_fringe_period(const ReflectionSpectrum& s, double lo, double hi);
// (max - min) / 2 within [lo, hi].
double fringe_half_amplitude(const ReflectionSpectrum& s, double lo, double hi);

double eta_from_reflection(double off_resonant_reflectance);

struct LorentzianFit {
  double resonance_wavelength = 0.0;
  double quality_factor = 0.0;
  double coupling_ratio = 0.0;  // undercoupled branch, <= 0.5
  double baseline = 0.0;        // multiplicative off-resonant level
  double rms_residual = 0.0;
  int iterations = 0;
};

// Damped least squares of baseline * cavity_reflectance. Reflection alone cannot tell rho
// from 1 - rho; the undercoupled value is reported.
LorentzianFit fit_lorentzian(const ReflectionSpectrum& spectrum);

struct Bandwidth {
  double peak_wavelength = 0.0;
  double peak_value = 0.0;
  double lower = 0.0, upper = 0.0;
  double width() const { return upper - lower; }
};

// Contiguous band around the maximum where the curve stays within `db` of its peak.
Bandwidth db_bandwidth(const std::vector<double>& wavelengths, const std::vector<double>& values, double db = 1.0);

// Two columns: wavelength_nm, reflectance.
void write_spectrum_csv(const std::filesystem::path& path, const ReflectionSpectrum& s);
ReflectionSpectrum read_spectrum_csv(const std::filesystem::path& path);

std::string format_fit_report(const LorentzianFit& fit);

}  // namespace hprobe::spectra
