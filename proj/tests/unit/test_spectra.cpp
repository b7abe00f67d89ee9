#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "test_util.hpp"
#include "hprobe/core/error.hpp"
#include "hprobe/spectra/spectra.hpp"

using namespace hprobe;
using namespace hprobe::spectra;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

ReflectionSpectrum cavity_scan(const CavitySpec& c, int points = 801, double span_lw = 20.0) {
  ReflectionSpectrum s;
  s.wavelengths = linspace(c.resonance_wavelength - 0.5 * span_lw * c.linewidth(),
                           c.resonance_wavelength + 0.5 * span_lw * c.linewidth(), points);
  for (double l : s.wavelengths) s.reflectance.push_back(cavity_reflectance(c, l));
  return s;
}

FringeSpec fringes(double r_gc, double eta) {
  FringeSpec f;
  f.gc_reflectivity = [r_gc](double) { return r_gc; };
  f.coupling_efficiency = eta;
  return f;
}

}  // namespace

TEST_CASE("critically coupled cavity vanishes on resonance") {
  CavitySpec c;
  CHECK(cavity_reflectance(c, c.resonance_wavelength) < 1e-20);
}

TEST_CASE("far-detuned cavity is a mirror") {
  CavitySpec c;
  c.coupling_ratio = 0.3;
  // x = 2 Q (lambda0/lambda - 1) = 50 kappa-widths away
  const double l = c.resonance_wavelength / (1.0 + 50.0 / (2.0 * c.quality_factor) * 2.0);
  CHECK(cavity_reflectance(c, l) >= 0.999);
}

TEST_CASE("dip full width at half depth is lambda/Q") {
  CavitySpec c;
  auto half = [&](double lo, double hi) {
    for (int i = 0; i < 200; ++i) {
      const double m = 0.5 * (lo + hi);
      ((cavity_reflectance(c, m) < 0.5) == (lo < c.resonance_wavelength) ? hi : lo) = m;
    }
    return 0.5 * (lo + hi);
  };
  const double l0 = c.resonance_wavelength, lw = c.linewidth();
  const double a = half(l0 - 5.0 * lw, l0), b = half(l0, l0 + 5.0 * lw);
  CHECK(b - a == approx(25.6e-12).epsilon(1e-3));
  CHECK(b - a == approx(lw).epsilon(1e-4));
}

TEST_CASE("fringe spectrum without grating reflection is the bare cavity") {
  CavitySpec c;
  c.coupling_ratio = 0.3;
  const auto wl = linspace(1535.9e-9, 1536.1e-9, 201);
  const auto s = fringe_spectrum(fringes(0.0, 1.0), c, wl);
  for (std::size_t i = 0; i < wl.size(); ++i)
    CHECK(s.reflectance[i] == approx(cavity_reflectance(c, wl[i])).epsilon(1e-12));
}

TEST_CASE("fringe period and amplitude") {
  CHECK(fringe_period(1536e-9, 4.0, 185e-6) == approx(1.594e-9).epsilon(1e-3));
  CavitySpec c;
  c.resonance_wavelength = 1500e-9;  // off-resonant across the scan
  const auto wl = linspace(1536e-9, 1546e-9, 2001);
  const auto s = fringe_spectrum(fringes(0.005, 0.557), c, wl);
  const double dl = wl[1] - wl[0];
  const double measured = measure_fringe_period(s, wl.front(), wl.back());
  CHECK(std::abs(measured - fringe_period(1541e-9, 4.0, 185e-6)) <= dl);

  ReflectionSpectrum eta_scale = s;
  for (auto& r : eta_scale.reflectance) r = eta_from_reflection(r);
  const double half = fringe_half_amplitude(eta_scale, wl.front(), wl.back());
  CHECK(std::abs(half - 0.05) <= 0.02);
  CHECK(fringe_half_amplitude(fringe_spectrum(fringes(0.01, 0.557), c, wl), wl.front(), wl.back()) >
        fringe_half_amplitude(s, wl.front(), wl.back()));
}

TEST_CASE("fringe spectrum stays within [0, 1]") {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto wl = linspace(1535.95e-9, 1536.05e-9, 301);
  for (int trial = 0; trial < 200; ++trial) {
    const double r = 0.999 * u(g);
    const double eta = (1.0 - std::sqrt(r)) * u(g);
    CavitySpec c;
    c.coupling_ratio = u(g);
    const auto s = fringe_spectrum(fringes(r, eta), c, wl);
    for (double v : s.reflectance) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("grating transmission beyond the passivity limit is rejected") {
  CavitySpec c;
  CHECK_THROWS_AS(fringe_spectrum(fringes(0.25, 0.6), c, {1536e-9}), ValidationError);
}

TEST_CASE("eta from off-resonant reflection") {
  CHECK(eta_from_reflection(0.2134) == approx(0.462).epsilon(1e-3));
  CHECK(eta_from_reflection(1.0) == 1.0);
  CHECK(eta_from_reflection(0.0) == 0.0);
  for (double r = 0.0; r <= 1.0; r += 0.01) {
    const double e = eta_from_reflection(r);
    CHECK(std::abs(e * e - r) <= 1e-15);
    if (r > 0.0) CHECK(e > eta_from_reflection(r - 0.01));
  }
  CHECK_THROWS_AS(eta_from_reflection(1.5), ValidationError);
  CHECK_THROWS_AS(eta_from_reflection(-0.1), ValidationError);
}

TEST_CASE("Lorentzian fit recovers its own forward model") {
  CavitySpec c;
  c.coupling_ratio = 0.3;
  const auto f = fit_lorentzian(cavity_scan(c));
  CHECK(f.resonance_wavelength == approx(1536e-9).epsilon(1e-3));
  CHECK(f.quality_factor == approx(6e4).epsilon(1e-3));
  CHECK(f.coupling_ratio == approx(0.3).epsilon(1e-3));
  CHECK(f.baseline == approx(1.0).epsilon(1e-3));
  CHECK(f.rms_residual < 1e-8);
}

TEST_CASE("Lorentzian fit with 1% noise keeps Q within 5%") {
  CavitySpec c;
  c.coupling_ratio = 0.3;
  const auto clean = cavity_scan(c);
  int ok = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 g(1000 + seed);
    std::normal_distribution<double> n(0.0, 0.01);
    auto s = clean;
    for (auto& r : s.reflectance) r = std::clamp(r + n(g), 0.0, 1.0);
    const auto f = fit_lorentzian(s);
    if (std::abs(f.quality_factor / 6e4 - 1.0) <= 0.05) ++ok;
  }
  CHECK(ok == 100);
}

TEST_CASE("Lorentzian fit preconditions") {
  CavitySpec c;
  c.coupling_ratio = 0.01;
  CHECK_THROWS_AS(fit_lorentzian(cavity_scan(c)), NumericalError);
  c.coupling_ratio = 0.3;
  CHECK_THROWS_AS(fit_lorentzian(cavity_scan(c, 801, 3.0)), ValidationError);
  CHECK_THROWS_AS(fit_lorentzian(cavity_scan(c, 61, 20.0)), ValidationError);
}

TEST_CASE("1 dB bandwidth of a Gaussian band") {
  const double width = 33e-9, l0 = 1536e-9;
  const double s = 0.5 * width / std::sqrt(0.1 * std::log(10.0));
  const auto wl = linspace(1480e-9, 1600e-9, 121);
  std::vector<double> d;
  for (double l : wl) d.push_back(0.625 * std::exp(-std::pow((l - l0) / s, 2)));
  const auto b = db_bandwidth(wl, d, 1.0);
  CHECK(std::abs(b.width() - 33e-9) <= 0.2e-9);
  CHECK(b.peak_wavelength == approx(l0));
  std::vector<double> flat(wl.size(), 0.5);
  CHECK_THROWS_AS(db_bandwidth(wl, flat, 1.0), NumericalError);
}

TEST_CASE("spectrum CSV round-trip") {
  const auto dir = std::filesystem::path(HPROBE_TEST_TMP) / "spectra";
  std::filesystem::create_directories(dir);
  const auto s = cavity_scan(CavitySpec{}, 101);
  write_spectrum_csv(dir / "s.csv", s);
  const auto r = read_spectrum_csv(dir / "s.csv");
  REQUIRE(r.wavelengths.size() == s.wavelengths.size());
  for (std::size_t i = 0; i < s.wavelengths.size(); ++i) {
    CHECK(r.wavelengths[i] == approx(s.wavelengths[i]).epsilon(1e-15));
    CHECK(r.reflectance[i] == s.reflectance[i]);
  }
  CHECK(format_fit_report(fit_lorentzian(cavity_scan(CavitySpec{}))).find("quality_factor") != std::string::npos);
}
