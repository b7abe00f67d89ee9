#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "test_util.hpp"
#include "hprobe/core/constants.hpp"
#include "hprobe/core/csv.hpp"
#include "hprobe/core/error.hpp"
#include "hprobe/mw/cpw.hpp"
#include "hprobe/mw/thermal.hpp"

using namespace hprobe;
using namespace hprobe::mw;

namespace {

const Eigen::Vector3d kSample{0.0, 0.0, 125e-6};

double wire_gauss(double current, double r) {
  return constants::mu0 * current / (2.0 * constants::pi * r) * constants::tesla_to_gauss;
}

spin::PulseSequence cpmg128() {
  spin::PulseSequence s;
  s.pi_pulse_count = 128;
  s.pi_duration = 78e-9;
  s.repetition_period = 36e-3;
  s.pulse_peak_power = 17.8;
  return s;
}

}  // namespace

TEST_CASE("peak current of a matched line") {
  CHECK(std::abs(peak_current(20.0, 50.0) - 0.894) <= 0.001);
  CHECK(peak_current(0.0, 50.0) == 0.0);
  CHECK(peak_current(1.0, 50.0) == approx(0.2).epsilon(1e-12));
  CHECK_THROWS_AS(peak_current(-1.0, 50.0), ValidationError);
  CHECK_THROWS_AS(peak_current(1.0, 0.0), ValidationError);
}

TEST_CASE("field at the sample for 1 W") {
  const auto f = field_at_point(CpwGeometry{}, 1.0, kSample);
  CHECK(std::abs(f.magnitude_B - 2.8) <= 0.5);
  CHECK(std::abs(f.polar_theta_deg - 69.2) <= 10.0);
  CHECK(f.frequency == 1.76e9);
  CHECK(f.reference_power == 1.0);
}

TEST_CASE("field scales with sqrt(P) and keeps its direction") {
  const CpwGeometry g;
  const auto a = field_at_point(g, 1.0, kSample);
  for (double p : {2.0, 4.0, 17.8}) {
    const auto b = field_at_point(g, p, kSample);
    CHECK(std::abs(b.magnitude_B / a.magnitude_B / std::sqrt(p) - 1.0) <= 1e-9);
    CHECK(std::abs(b.polar_theta_deg - a.polar_theta_deg) <= 1e-9);
    CHECK(std::abs(b.azimuth_phi_deg - a.azimuth_phi_deg) <= 1e-9);
    const auto c = a.at_power(p);
    CHECK(std::abs(c.magnitude_B / b.magnitude_B - 1.0) <= 1e-9);
  }
  AcFieldVector none;
  CHECK_THROWS_AS(none.at_power(1.0), ValidationError);
}

TEST_CASE("azimuth vanishes on the symmetry plane") {
  for (auto layout : {GroundLayout::symmetric, GroundLayout::single_sided}) {
    CpwGeometry g;
    g.grounds = layout;
    for (double z : {20e-6, 125e-6, 400e-6}) CHECK(std::abs(field_at_point(g, 1.0, {0.0, 0.0, z}).azimuth_phi_deg) <= 1e-6);
  }
  CpwGeometry sym;
  sym.grounds = GroundLayout::symmetric;
  // mirror symmetry: over the pin center the field is purely horizontal
  CHECK(std::abs(field_vector(sym, 1.0, kSample).z()) <= 1e-12 * field_vector(sym, 1.0, kSample).norm());
}

TEST_CASE("cartesian and spherical forms agree") {
  const Eigen::Vector3d b(1.0, 0.4, -2.0);
  const auto f = AcFieldVector::from_cartesian(b, 1.0, 1.76e9);
  CHECK((f.cartesian() - b).norm() <= 1e-12);
  const auto g = AcFieldVector::from_cartesian(-b, 1.0, 1.76e9);
  CHECK((g.cartesian() - b).norm() <= 1e-12);
  CHECK(f.polar_theta_deg >= 0.0);
  CHECK(f.polar_theta_deg <= 180.0);
}

TEST_CASE("profile decays monotonically and matches point evaluation") {
  const CpwGeometry g;
  std::vector<double> dz;
  for (double z = 10e-6; z <= 1e-3; z *= 1.25) dz.push_back(z);
  const auto prof = field_profile(g, 1.0, dz);
  for (std::size_t i = 1; i < prof.size(); ++i) CHECK(prof[i].magnitude_B < prof[i - 1].magnitude_B);
  for (double z : dz) CHECK(field_profile(g, 1.0, {2.0 * z})[0].magnitude_B < field_profile(g, 1.0, {z})[0].magnitude_B);
  const auto at = field_profile(g, 1.0, {125e-6})[0];
  CHECK(std::abs(at.magnitude_B - field_at_point(g, 1.0, kSample).magnitude_B) <= 1e-12 * at.magnitude_B);
  CHECK_THROWS_AS(field_profile(g, 1.0, {0.0}), ValidationError);
}

TEST_CASE("far field falls off faster than an isolated wire") {
  for (auto layout : {GroundLayout::symmetric, GroundLayout::single_sided}) {
    CpwGeometry g;
    g.grounds = layout;
    const double total = g.center_width + (layout == GroundLayout::symmetric ? 2.0 : 1.0) * (g.gap + g.ground_width);
    const double i = peak_current(1.0, g.characteristic_impedance);
    const double near = 125e-6, far = 10.0 * total;
    const double ratio_near = field_at_point(g, 1.0, {0.0, 0.0, near}).magnitude_B / wire_gauss(i, near);
    const double ratio_far = field_at_point(g, 1.0, {0.0, 0.0, far}).magnitude_B / wire_gauss(i, far);
    CHECK(ratio_far < 1.0);
    CHECK(ratio_far < ratio_near);
  }
}

TEST_CASE("filament sets carry zero net current and superpose") {
  for (auto dist : {CurrentDistribution::uniform, CurrentDistribution::edge_weighted})
    for (auto layout : {GroundLayout::symmetric, GroundLayout::single_sided}) {
      CpwGeometry g;
      g.distribution = dist;
      g.grounds = layout;
      const auto f = filament_set(g, 0.2);
      const double net = std::accumulate(f.begin(), f.end(), 0.0, [](double s, const Filament& x) { return s + x.current; });
      CHECK(std::abs(net) <= 1e-13 * 0.2);
      double pin = 0.0;
      for (const auto& x : f)
        if (std::abs(x.x) < 0.5 * g.center_width) pin += x.current;
      CHECK(pin == approx(0.2).epsilon(1e-12));
    }
  CpwGeometry g;
  auto a = filament_set(g, 0.2);
  g.grounds = GroundLayout::symmetric;
  const auto b = filament_set(g, -0.1);
  auto both = a;
  both.insert(both.end(), b.begin(), b.end());
  const Eigen::Vector3d p(30e-6, 0.0, 80e-6);
  const Eigen::Vector3d sum = line_field(a, p) + line_field(b, p);
  CHECK((line_field(both, p) - sum).norm() <= 1e-12 * sum.norm());
}

TEST_CASE("doubling the filament count from 64 moves the field by < 0.5%") {
  for (auto dist : {CurrentDistribution::uniform, CurrentDistribution::edge_weighted}) {
    CpwGeometry g;
    g.distribution = dist;
    const double b64 = field_at_point(g, 1.0, kSample).magnitude_B;
    g.filaments = 128;
    const double b128 = field_at_point(g, 1.0, kSample).magnitude_B;
    CHECK(std::abs(b128 / b64 - 1.0) < 5e-3);
  }
}

TEST_CASE("points inside metal are rejected") {
  const CpwGeometry g;
  CHECK_THROWS_AS(field_at_point(g, 1.0, {0.0, 0.0, -0.5e-6}), GeometryError);
  CHECK_THROWS_AS(field_at_point(g, 1.0, {-100e-6, 0.0, -0.5e-6}), GeometryError);
  CHECK_NOTHROW(field_at_point(g, 1.0, {0.0, 0.0, 1e-6}));
  CpwGeometry bad;
  bad.gap = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("field map CSV columns") {
  const auto dir = std::filesystem::path(HPROBE_TEST_TMP) / "mw";
  std::filesystem::create_directories(dir);
  const CpwGeometry g;
  write_field_map_csv(dir / "map.csv", g, 1.0, {kSample, {20e-6, 0.0, 60e-6}});
  const auto t = csv::read(dir / "map.csv");
  CHECK(t.header == std::vector<std::string>{"x_m", "y_m", "z_m", "Bx_G", "By_G", "Bz_G"});
  REQUIRE(t.rows.size() == 2);
  const auto b = field_vector(g, 1.0, kSample);
  CHECK(csv::column(t, "Bx_G")[0] == b.x());
  CHECK(csv::column(t, "Bz_G")[0] == b.z());
}

TEST_CASE("insertion loss budget") {
  const auto b = insertion_loss_budget({{"cables", 3.7}, {"cpw_pcb", 1.0}});
  CHECK(b.total_db == approx(4.7).epsilon(1e-12));
  CHECK(std::abs(b.transmission - 0.339) <= 5e-4);
  const auto e = insertion_loss_budget({});
  CHECK(e.total_db == 0.0);
  CHECK(e.transmission == 1.0);
  CHECK_THROWS_AS(insertion_loss_budget({{"gain", -1.0}}), ValidationError);
  CHECK(format_budget({{"cables", 3.7}}, insertion_loss_budget({{"cables", 3.7}})).find("cables_db = 3.7") !=
        std::string::npos);
}

TEST_CASE("heating model") {
  const ThermalModel m;
  CHECK(heating(m, 5.0).rise_mk == approx(18.0).epsilon(1e-12));
  CHECK(std::abs(heating(m, 5.0).rise_mk - 17.0) <= 3.0);
  CHECK(heating(m, 0.0).rise_mk == 0.0);
  CHECK(std::abs(heating(m, 5.0).naive_bound_mk - 71.0) <= 0.5);
  CHECK(heating(m, 5.0).naive_bound_mk / heating(m, 5.0).rise_mk == approx(4.0).epsilon(0.02));
  for (double a : {0.3, 2.0, 7.5})
    for (double b : {0.1, 4.0})
      CHECK(heating(m, a + b).rise_mk == approx(heating(m, a).rise_mk + heating(m, b).rise_mk).epsilon(1e-12));
  CHECK_THROWS_AS(heating(m, -1.0), ValidationError);
  ThermalModel cold;
  cold.stage_cooling_power = 0.0;
  CHECK_THROWS_AS(heating(cold, 1.0), ValidationError);
}

TEST_CASE("duty cycle and average power") {
  const auto d = duty_cycle_power(cpmg128(), 17.8);
  CHECK(std::abs(d.duty - 2.77e-4) <= 0.01e-4);
  CHECK(std::abs(d.duty - 2.8e-4) <= 0.1e-4);
  CHECK(std::abs(d.average_power_mw - 4.9) <= 0.2);
  // heating chain from the sequence
  CHECK(std::abs(heating(ThermalModel{}, d.average_power_mw).rise_mk - 17.0) <= 3.0);

  auto none = cpmg128();
  none.kind = spin::PulseSequence::Kind::ramsey;
  none.pi_pulse_count = 0;
  CHECK(duty_cycle_power(none, 17.8).average_power_mw == 0.0);
  none.kind = spin::PulseSequence::Kind::cpmg;
  CHECK_THROWS_AS(duty_cycle_power(none, 17.8), ValidationError);

  auto cw = cpmg128();
  cw.pi_pulse_count = 1;
  cw.pi_duration = cw.repetition_period;
  CHECK(duty_cycle_power(cw, 17.8).average_power_mw == approx(17.8e3).epsilon(1e-12));

  auto over = cpmg128();
  over.pi_duration = 1e-3;
  CHECK_THROWS_AS(duty_cycle_power(over, 17.8), ValidationError);
}
