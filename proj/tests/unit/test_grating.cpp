#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "test_util.hpp"
#include "hprobe/core/error.hpp"
#include "hprobe/grating/budget.hpp"
#include "hprobe/grating/effective_index.hpp"
#include "hprobe/grating/schedule.hpp"
#include "hprobe/grating/slab_mode.hpp"

using namespace hprobe;
using namespace hprobe::grating;

namespace {

// Independent TE0 dispersion oracle: kappa t = atan(g_s / kappa) + atan(g_c / kappa).
double slab_oracle(double n1, double t, double lam, double ns, double nc) {
  const double k0 = 2.0 * std::numbers::pi / lam;
  auto f = [&](double n) {
    const double kap = k0 * std::sqrt(n1 * n1 - n * n);
    const double gs = k0 * std::sqrt(n * n - ns * ns);
    const double gc = k0 * std::sqrt(n * n - nc * nc);
    return kap * t - std::atan(gs / kap) - std::atan(gc / kap);
  };
  double lo = std::max(ns, nc) + 1e-12, hi = n1 - 1e-12;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

GuidedIndexModel soi_model() { return slab_guided_model(220e-9, 1536e-9, 1.78, 1.0); }

}  // namespace

TEST_CASE("effective index without holes is the host index") {
  CHECK(effective_index_from_hole(0.0, 3.48, 1.0) == approx(3.48).epsilon(1e-15));
}

TEST_CASE("effective index follows the declared permittivity mixing rule") {
  const double r = 0.99;
  const double f = std::numbers::pi * r * r / (2.0 * std::sqrt(3.0));
  const double expect = std::sqrt(f * 1.0 + (1.0 - f) * 3.48 * 3.48);
  CHECK(effective_index_from_hole(r, 3.48, 1.0) == approx(expect).epsilon(1e-12));
  CHECK(triangular_fill_fraction(r) == approx(f).epsilon(1e-14));
}

TEST_CASE("effective index near touching holes is close to 1.30" * doctest::may_fail()) {
  // The fill-fraction formula gives 1.495 here, 15% above the quoted 1.30.
  CHECK(std::abs(effective_index_from_hole(0.99, 3.48, 1.0) - 1.30) <= 0.13);
}

TEST_CASE("effective index is strictly decreasing and inverts") {
  double prev = effective_index_from_hole(0.0, 3.48, 1.0);
  for (int i = 1; i < 100; ++i) {
    const double n = effective_index_from_hole(0.0099 * i, 3.48, 1.0);
    CHECK(n < prev);
    prev = n;
  }
  for (double target : {3.05, 2.5, 2.0, 1.7}) {
    const double r = hole_ratio_for_index(target, 3.48, 1.0);
    CHECK(std::abs(effective_index_from_hole(r, 3.48, 1.0) - target) < 1e-6);
  }
  for (double target : {3.05, 2.5}) {
    const double r = hole_ratio_for_index(target, 3.48, 1.0, index_mixing());
    CHECK(std::abs(effective_index_from_hole(r, 3.48, 1.0, index_mixing()) - target) < 1e-6);
  }
}

TEST_CASE("overlapping holes are a geometry error") {
  CHECK_THROWS_AS(effective_index_from_hole(1.0, 3.48, 1.0), GeometryError);
  CHECK_THROWS_AS(effective_index_from_hole(-0.1, 3.48, 1.0), ValidationError);
  CHECK_THROWS_AS(hole_ratio_for_index(3.6, 3.48, 1.0), ValidationError);
}

TEST_CASE("slab mode: bulk limit") {
  const double lam = 1536e-9;
  CHECK(std::abs(slab_modal_index(3.48, 50.0 * lam, lam, 1.78, 1.0) - 3.48) < 1e-3);
}

TEST_CASE("slab mode: 220 nm SOI on YSO matches the bisection oracle") {
  const double n = slab_modal_index(3.48, 220e-9, 1536e-9, 1.78, 1.0);
  CHECK(n > 1.78);
  CHECK(n < 3.48);
  CHECK(n == approx(slab_oracle(3.48, 220e-9, 1536e-9, 1.78, 1.0)).epsilon(1e-9));
  CHECK(n == approx(2.8618143592).epsilon(1e-9));
}

TEST_CASE("slab mode: symmetric stack is invariant under swapping sides") {
  const double a = slab_modal_index(3.48, 300e-9, 1550e-9, 1.44, 1.44);
  CHECK(a == approx(slab_oracle(3.48, 300e-9, 1550e-9, 1.44, 1.44)).epsilon(1e-9));
  const double b = slab_modal_index(3.48, 300e-9, 1550e-9, 1.78, 1.0);
  const double c = slab_modal_index(3.48, 300e-9, 1550e-9, 1.0, 1.78);
  CHECK(b == approx(c).epsilon(1e-10));
}

TEST_CASE("slab mode: below cutoff is an error") {
  CHECK_THROWS_AS(slab_modal_index(1.5, 220e-9, 1536e-9, 1.78, 1.0), ValidationError);
  CHECK_THROWS_AS(slab_modal_index(3.48, -1.0, 1536e-9, 1.78, 1.0), ValidationError);
}

TEST_CASE("slab mode field is continuous at the interfaces") {
  const auto m = solve_slab_te0(3.48, 220e-9, 1536e-9, 1.78, 1.0);
  CHECK(m.field(-1e-15) == approx(m.field(1e-15)).epsilon(1e-6));
  CHECK(m.field(220e-9 - 1e-15) == approx(m.field(220e-9 + 1e-15)).epsilon(1e-6));
  CHECK(std::abs(m.field(-2e-6)) < 1e-3 * std::abs(m.field(110e-9)));
}

TEST_CASE("uniform grating with matched index has 600 nm pitch everywhere") {
  const auto model = soi_model();
  const double lam = 1536e-9, theta = 11.3;
  const double want = lam / 600e-9 + std::sin(theta * std::numbers::pi / 180.0);
  double lo = 2.3, hi = 3.48;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (model(period_material_index(mid, 3.48, 0.5)) < want ? lo : hi) = mid;
  }
  GratingSpec spec;
  spec.first_period_index_n1 = 0.5 * (lo + hi);
  spec.index_step_dn = 0.0;
  spec.period_count = 8;
  const auto s = build_schedule(spec, model);
  REQUIRE(s.periods.size() == 8);
  for (const auto& p : s.periods) CHECK(p.pitch == approx(600e-9).epsilon(1e-9));
}

TEST_CASE("linear apodization gives increasing pitches and phase-matched periods") {
  GratingSpec spec;
  const auto model = soi_model();
  const auto s = build_schedule(spec, model);
  REQUIRE(s.periods.size() == 20);
  CHECK(s.periods.front().index == approx(3.05));
  for (std::size_t i = 0; i < s.periods.size(); ++i) {
    const auto& p = s.periods[i];
    if (i > 0) {
      CHECK(p.pitch > s.periods[i - 1].pitch);
      CHECK(p.index < s.periods[i - 1].index);
    }
    const double nm = model(period_material_index(p.index, spec.n_si, spec.duty_cycle));
    const double residual = p.pitch * (nm - std::sin(spec.target_angle_deg * std::numbers::pi / 180.0)) -
                            spec.design_wavelength;
    CHECK(std::abs(residual) < 1e-9);
    CHECK(p.hole_diameter > 0.0);
    CHECK(p.hole_diameter < spec.lattice_constant_a);
    CHECK(effective_index_from_hole(p.hole_diameter / spec.lattice_constant_a, 3.48, 1.0) ==
          approx(p.index).epsilon(1e-6));
  }
}

TEST_CASE("per-period design angles enter the phase matching") {
  GratingSpec spec;
  spec.period_count = 3;
  spec.period_angle_deg = {9.0, 10.0, 11.0};
  const auto model = soi_model();
  const auto s = build_schedule(spec, model);
  for (int i = 0; i < 3; ++i) {
    const double nm = model(period_material_index(s.periods[i].index, 3.48, 0.5));
    CHECK(s.periods[i].pitch == approx(phase_matched_pitch(nm, 1536e-9, 9.0 + i)).epsilon(1e-14));
  }
  spec.period_angle_deg = {9.0};
  CHECK_THROWS_AS(build_schedule(spec, model), ValidationError);
}

TEST_CASE("index ladder leaving the physical range names the period") {
  GratingSpec spec;
  spec.index_step_dn = -0.2;  // n_10 = 1.25 is below the smallest hole-reachable index
  try {
    build_schedule(spec, soi_model());
    FAIL("expected an apodization error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("period 10") != std::string::npos);
  }
  spec.index_step_dn = -0.12;
  spec.period_count = 30;  // n_27 = -0.07
  CHECK_THROWS_WITH_AS(build_schedule(spec, soi_model()), doctest::Contains("period"), ValidationError);
}

TEST_CASE("non-subwavelength lattice is rejected") {
  GratingSpec spec;
  spec.lattice_constant_a = 700e-9;
  CHECK_THROWS_AS(build_schedule(spec, soi_model()), ValidationError);
  spec.lattice_constant_a = 2e-6;
  CHECK_THROWS_AS(build_schedule(spec, soi_model()), ValidationError);
}

TEST_CASE("schedule CSV round-trips bit for bit") {
  const auto s = build_schedule(GratingSpec{}, soi_model());
  const auto dir = std::filesystem::path(HPROBE_TEST_TMP) / "grating";
  std::filesystem::create_directories(dir);
  write_schedule_csv(dir / "schedule.csv", s);
  const auto r = read_schedule_csv(dir / "schedule.csv");
  REQUIRE(r.periods.size() == s.periods.size());
  for (std::size_t i = 0; i < s.periods.size(); ++i) {
    CHECK(r.periods[i].index == s.periods[i].index);
    CHECK(r.periods[i].pitch == s.periods[i].pitch);
    CHECK(r.periods[i].hole_diameter == s.periods[i].hole_diameter);
    CHECK(r.periods[i].duty_cycle == s.periods[i].duty_cycle);
  }
}

TEST_CASE("efficiency budget") {
  const auto b = compose_budget(0.625, 0.977, 0.983, 0.962, 0.964);
  CHECK(std::abs(b.total_eta - 0.557) <= 0.001);
  CHECK(b.directionality_D == 0.625);
  CHECK(b.interface_transmission == 0.964);
  CHECK(compose_budget(1, 1, 1, 1, 1).total_eta == 1.0);
  CHECK(compose_budget(0.625, 0.0, 0.983, 0.962, 0.964).total_eta == 0.0);
  const auto c = compose_budget(0.964, 0.962, 0.983, 0.977, 0.625);
  CHECK(c.total_eta == approx(b.total_eta).epsilon(1e-15));
  const auto h = compose_budget(0.3125, 0.977, 0.983, 0.962, 0.964);
  CHECK(h.total_eta == approx(0.5 * b.total_eta).epsilon(1e-15));
  CHECK_THROWS_AS(compose_budget(1.1, 1, 1, 1, 1), ValidationError);
  CHECK_THROWS_AS(compose_budget(1, -0.1, 1, 1, 1), ValidationError);
}

TEST_CASE("glass-air interface transmission") {
  CHECK(fresnel_transmission(1.47) == approx(0.964).epsilon(1e-3));
  CHECK(fresnel_transmission(1.0) == 1.0);
}
