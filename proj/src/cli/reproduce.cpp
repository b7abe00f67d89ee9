#include "hprobe/cli/reproduce.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "hprobe/core/csv.hpp"

namespace hprobe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

bool ReproduceResult::all_pass() const {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return true;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

SummaryRow within(std::string tag, std::string q, double computed, double target, double tol) {
  return {std::move(tag), std::move(q), computed, target, "+/- " + fmt(tol), std::abs(computed - target) <= tol};
}

SummaryRow relative(std::string tag, std::string q, double computed, double target, double rel) {
  return {std::move(tag), std::move(q), computed, target, "+/- " + fmt(100.0 * rel) + "%",
          std::abs(computed / target - 1.0) <= rel};
}

SummaryRow range(std::string tag, std::string q, double computed, double target, double lo, double hi) {
  return {std::move(tag), std::move(q), computed, target, "[" + fmt(lo) + ", " + fmt(hi) + "]",
          computed >= lo && computed <= hi};
}

SummaryRow at_least(std::string tag, std::string q, double computed, double bound) {
  return {std::move(tag), std::move(q), computed, bound, ">= " + fmt(bound), computed >= bound};
}

SummaryRow at_most(std::string tag, std::string q, double computed, double target, double bound) {
  return {std::move(tag), std::move(q), computed, target, "<= " + fmt(bound), computed <= bound};
}

}  // namespace

ReproduceResult reproduce_figures(const fs::path& out, std::uint64_t seed, const RunOptions& ro) {
  ReproduceResult res;
  auto run = [&](StudyKind k, const std::string& dir, json overrides = json::object()) {
    json doc{{"study", study_name(k)}, {"seed", seed}, {"output_directory", (out / dir).generic_string()},
             {"parameters", overrides}};
    res.runs.push_back(run_study(parse_config(doc), ro));
    return res.runs.back().results;
  };
  auto& rows = res.rows;

  const auto g = run(StudyKind::grating, "fig2b_grating");
  rows.push_back(within("fig2b", "eta_sim", g["eta_sim"], 0.557, 0.001));

  const auto f = run(StudyKind::fdtd, "fig2c_fdtd");
  rows.push_back(range("fig2c", "directionality", f["directionality"], 0.625, 0.55, 0.70));
  rows.push_back(at_most("fig2c", "reflection", f["reflection"], 0.005, 0.02));
  rows.push_back(within("fig2c", "diffraction_angle_deg", f["angle_deg"], 11.3, 1.5));
  rows.push_back(within("fig2f", "bandwidth_1db_nm", f["bandwidth_1db_m"].get<double>() * 1e9, 33.0, 10.0));

  const auto a = run(StudyKind::align, "fig4_align",
                     {{"field_file", (out / "fig2c_fdtd" / "field_design.bin").generic_string()},
                      {"directionality", f["directionality"]}});
  rows.push_back(within("fig2e", "incidence_angle_deg", a["incidence_angle_deg"], 11.2, 0.1));
  rows.push_back(within("fig4b", "x_diameter_um", a["sweeps"]["x"]["gaussian_diameter_m"].get<double>() * 1e6, 14.3, 1.5));
  rows.push_back(at_least("fig4", "eta_ratio_x_1um", a["sweeps"]["x"]["ratio_at_unit_offset"], 0.95));
  rows.push_back(at_least("fig4", "eta_ratio_y_1um", a["sweeps"]["y"]["ratio_at_unit_offset"], 0.95));
  rows.push_back(at_least("fig4", "eta_ratio_pitch_1deg", a["sweeps"]["pitch"]["ratio_at_unit_offset"], 0.95));
  rows.push_back(at_least("fig4", "eta_ratio_rotation_1deg", a["sweeps"]["rotation"]["ratio_at_unit_offset"], 0.95));

  const auto s = run(StudyKind::spectrum, "fig2fg_spectrum");
  rows.push_back(within("fig2f", "fringe_period_nm", s["fringe_period_m"].get<double>() * 1e9,
                        s["fringe_period_expected_m"].get<double>() * 1e9,
                        s["fringe_sample_spacing_m"].get<double>() * 1e9));
  rows.push_back(within("fig2f", "eta_fringe_amplitude", s["eta_fringe_half_amplitude"], 0.05, 0.02));
  rows.push_back(relative("fig2g", "cavity_Q", s["fit_quality_factor"], 6e4, 0.05));

  const auto c = run(StudyKind::cpw, "fig3_cpw");
  rows.push_back(within("fig3a", "peak_current_20W", c["peak_current_20W_A"], 0.9, 0.05));
  rows.push_back(within("fig3a", "field_1W_G", c["field_G"], 2.8, 0.5));
  rows.push_back(within("fig3a", "field_theta_deg", c["theta_deg"], 69.0, 10.0));
  rows.push_back(within("fig3c", "duty_cycle", c["duty"], 2.8e-4, 0.1e-4));
  rows.push_back(within("fig3c", "average_power_mW", c["average_power_mW"], 4.9, 0.2));
  rows.push_back(within("fig3c", "heating_mK", c["heating_mK"], 17.0, 3.0));

  const auto sp = run(StudyKind::spin, "fig5_spin");
  rows.push_back(within("fig5d", "pi_time_ns", sp["pi_time_s"].get<double>() * 1e9, 78.0, 1e-6));
  rows.push_back(at_most("fig5d", "rabi_cycle_residual", sp["rabi"]["cycle_residual"], 0.0, 1e-6));
  rows.push_back(at_most("fig5c", "odmr_vs_rabi_formula", sp["odmr"]["max_analytic_deviation"], 0.0, 1e-6));
  rows.push_back(within("fig5e", "cpmg_alpha", sp["cpmg"]["alpha"], 0.76, 0.05));
  rows.push_back(relative("fig5", "tomography_B_G", sp["tomography"]["B_G"], 3.0, 0.03));
  rows.push_back(at_most("fig5b", "readout_oracle_deviation", sp["readout"]["max_oracle_deviation"], 0.0, 0.01));

  write_summary_csv(out / "summary.csv", rows);
  return res;
}

std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(7) << "tag" << std::setw(28) << "quantity" << std::setw(14) << "computed"
     << std::setw(12) << "target" << std::setw(20) << "tolerance" << "result\n";
  for (const auto& r : rows)
    os << std::left << std::setw(7) << r.tag << std::setw(28) << r.quantity << std::setw(14) << fmt(r.computed)
       << std::setw(12) << fmt(r.target) << std::setw(20) << r.tolerance << (r.pass ? "PASS" : "FAIL") << "\n";
  return os.str();
}

void write_summary_csv(const fs::path& path, const std::vector<SummaryRow>& rows) {
  csv::Table t;
  t.header = {"tag", "quantity", "computed", "target", "tolerance", "pass"};
  for (const auto& r : rows)
    t.rows.push_back({r.tag, r.quantity, csv::format_double(r.computed), csv::format_double(r.target), r.tolerance,
                      r.pass ? "PASS" : "FAIL"});
  csv::write(path, t);
}

}  // namespace hprobe::cli
