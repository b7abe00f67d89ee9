#include "hprobe/spectra/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hprobe/core/constants.hpp"
#include "hprobe/core/csv.hpp"
#include "hprobe/core/error.hpp"

namespace hprobe::spectra {

using constants::pi;

void CavitySpec::validate() const {
  if (!(resonance_wavelength > 0.0)) throw ValidationError("resonance wavelength must be > 0");
  if (!(quality_factor > 0.0)) throw ValidationError("quality factor must be > 0");
  require_in_range(coupling_ratio, 0.0, 1.0, "coupling_ratio");
}

void FringeSpec::validate(double wavelength) const {
  if (!(path_length > 0.0)) throw ValidationError("path_length must be > 0");
  if (!(group_index > 0.0)) throw ValidationError("group_index must be > 0");
  const double r = gc_reflectivity(wavelength);
  if (!(r >= 0.0 && r < 1.0)) throw ValidationError("grating reflectivity must lie in [0, 1)");
  require_in_range(coupling_efficiency, 0.0, 1.0 - std::sqrt(r), "coupling_efficiency (passivity: <= 1 - sqrt(R_GC))");
}

void ReflectionSpectrum::validate() const {
  if (wavelengths.size() != reflectance.size()) throw ValidationError("spectrum columns differ in length");
}

std::complex<double> cavity_amplitude(const CavitySpec& c, double wavelength) {
  c.validate();
  const double x = 2.0 * c.quality_factor * (c.resonance_wavelength / wavelength - 1.0);
  return 1.0 - 2.0 * c.coupling_ratio / std::complex<double>(1.0, x);
}

double cavity_reflectance(const CavitySpec& c, double wavelength) { return std::norm(cavity_amplitude(c, wavelength)); }

ReflectionSpectrum fringe_spectrum(const FringeSpec& f, const CavitySpec& cavity, const std::vector<double>& wavelengths) {
  ReflectionSpectrum s;
  s.wavelengths = wavelengths;
  for (double lam : wavelengths) {
    f.validate(lam);
    const double r1 = std::sqrt(f.gc_reflectivity(lam));
    const auto r2 = cavity_amplitude(cavity, lam);
    const auto e = std::polar(1.0, 4.0 * pi * f.group_index * f.path_length / lam);
    const double eta = f.coupling_efficiency;
    s.reflectance.push_back(eta * eta * std::norm(r2 * e / (1.0 - r1 * r2 * e)));
  }
  return s;
}

double fringe_period(double wavelength, double group_index, double path_length) {
  if (!(group_index > 0.0) || !(path_length > 0.0)) throw ValidationError("fringe period needs positive n_g and L");
  return wavelength * wavelength / (2.0 * group_index * path_length);
}

double measure_fringe_period(const ReflectionSpectrum& s, double lo, double hi) {
  s.validate();
  std::vector<double> peaks;
  const auto& x = s.wavelengths;
  const auto& y = s.reflectance;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    if (x[i] < lo || x[i] > hi) continue;
    if (y[i] > y[i - 1] && y[i] >= y[i + 1]) {
      const double den = y[i - 1] - 2.0 * y[i] + y[i + 1];
      const double t = den != 0.0 ? 0.5 * (y[i - 1] - y[i + 1]) / den : 0.0;
      peaks.push_back(x[i] + t * 0.5 * (x[i + 1] - x[i - 1]));
    }
  }
  if (peaks.size() < 2) throw NumericalError("fewer than two fringe maxima in range");
  return (peaks.back() - peaks.front()) / static_cast<double>(peaks.size() - 1);
}

double fringe_half_amplitude(const ReflectionSpectrum& s, double lo, double hi) {
  s.validate();
  double mn = 1e300, mx = -1e300;
  for (std::size_t i = 0; i < s.wavelengths.size(); ++i) {
    if (s.wavelengths[i] < lo || s.wavelengths[i] > hi) continue;
    mn = std::min(mn, s.reflectance[i]);
    mx = std::max(mx, s.reflectance[i]);
  }
  if (mx < mn) throw ValidationError("no samples in fringe range");
  return 0.5 * (mx - mn);
}

double eta_from_reflection(double r) {
  require_in_range(r, 0.0, 1.0, "off-resonant reflectance");
  return std::sqrt(r);
}

Bandwidth db_bandwidth(const std::vector<double>& x, const std::vector<double>& y, double db) {
  if (x.size() != y.size() || x.size() < 3) throw ValidationError("bandwidth needs >= 3 matching samples");
  if (!(db > 0.0)) throw ValidationError("bandwidth level must be > 0 dB");
  const auto ip = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  Bandwidth b;
  b.peak_wavelength = x[ip];
  b.peak_value = y[ip];
  if (!(b.peak_value > 0.0)) throw ValidationError("bandwidth of a non-positive curve");
  const double level = b.peak_value * std::pow(10.0, -db / 10.0);
  auto cross = [&](std::size_t i, std::size_t j) {
    return x[i] + (level - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
  };
  std::size_t i = ip;
  while (i > 0 && y[i - 1] >= level) --i;
  if (i == 0) throw NumericalError("curve does not fall below the bandwidth level on the short side");
  b.lower = cross(i - 1, i);
  std::size_t j = ip;
  while (j + 1 < y.size() && y[j + 1] >= level) ++j;
  if (j + 1 == y.size()) throw NumericalError("curve does not fall below the bandwidth level on the long side");
  b.upper = cross(j, j + 1);
  return b;
}

void write_spectrum_csv(const std::filesystem::path& path, const ReflectionSpectrum& s) {
  s.validate();
  csv::Table t;
  t.header = {"wavelength_nm", "reflectance"};
  for (std::size_t i = 0; i < s.wavelengths.size(); ++i)
    t.rows.push_back({csv::format_double(s.wavelengths[i] * 1e9), csv::format_double(s.reflectance[i])});
  csv::write(path, t);
}

ReflectionSpectrum read_spectrum_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  ReflectionSpectrum s;
  for (double nm : csv::column(t, "wavelength_nm")) s.wavelengths.push_back(nm * 1e-9);
  s.reflectance = csv::column(t, "reflectance");
  return s;
}

std::string format_fit_report(const LorentzianFit& f) {
  std::ostringstream os;
  os << "resonance_wavelength_m = " << csv::format_double(f.resonance_wavelength) << "\n"
     << "quality_factor = " << csv::format_double(f.quality_factor) << "\n"
     << "coupling_ratio = " << csv::format_double(f.coupling_ratio) << "\n"
     << "baseline = " << csv::format_double(f.baseline) << "\n"
     << "rms_residual = " << csv::format_double(f.rms_residual) << "\n"
     << "iterations = " << f.iterations << "\n";
  return os.str();
}

}  // namespace hprobe::spectra
