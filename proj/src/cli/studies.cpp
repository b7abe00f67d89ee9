#include "hprobe/cli/studies.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <random>
#include <sstream>

#include "hprobe/cli/svg_plot.hpp"
#include "hprobe/core/constants.hpp"
#include "hprobe/core/csv.hpp"
#include "hprobe/core/error.hpp"
#include "hprobe/core/rng.hpp"
#include "hprobe/fdtd/field_io.hpp"
#include "hprobe/fdtd/grating_run.hpp"
#include "hprobe/fiber/coupling.hpp"
#include "hprobe/fiber/tolerance.hpp"
#include "hprobe/grating/budget.hpp"
#include "hprobe/grating/schedule.hpp"
#include "hprobe/mw/cpw.hpp"
#include "hprobe/mw/thermal.hpp"
#include "hprobe/spectra/spectra.hpp"
#include "hprobe/spin/bloch.hpp"
#include "hprobe/spin/cpmg.hpp"
#include "hprobe/spin/readout.hpp"
#include "hprobe/spin/tomography.hpp"

namespace hprobe::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using csv::format_double;

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + p.string());
  out << text;
  if (!out) throw ValidationError("write failed: " + p.string());
}

// Tracks files as they are completed.
class Outputs {
 public:
  explicit Outputs(fs::path dir, std::vector<std::string>& list) : dir_(std::move(dir)), list_(list) {}
  void emit(const std::string& name, const std::function<void(const fs::path&)>& writer) {
    writer(dir_ / name);
    list_.push_back(name);
  }
  void text(const std::string& name, const std::string& body) {
    emit(name, [&](const fs::path& p) { write_text(p, body); });
  }

 private:
  fs::path dir_;
  std::vector<std::string>& list_;
};

std::vector<std::string> seed_comment(std::uint64_t seed) { return {"seed = " + std::to_string(seed)}; }

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return v;
}

std::vector<double> scaled(const std::vector<double>& v, double s) {
  std::vector<double> o(v);
  for (auto& x : o) x *= s;
  return o;
}

// ---- grating helpers

grating::GratingSpec grating_spec(const json& p) {
  grating::GratingSpec s;
  s.lattice_constant_a = p["lattice_constant"];
  s.n_si = p["n_si"];
  s.n_fill = p["n_fill"];
  s.first_period_index_n1 = p["first_period_index"];
  s.index_step_dn = p["index_step"];
  s.period_count = p["period_count"];
  s.duty_cycle = p["duty_cycle"];
  s.design_wavelength = p["design_wavelength"];
  s.target_angle_deg = p["target_angle_deg"];
  s.waveguide_width_wy = p["waveguide_width"];
  s.period_angle_deg = p["period_angle_deg"].get<std::vector<double>>();
  s.validate();
  return s;
}

fdtd::LayerStack layer_stack(const json& p) {
  fdtd::LayerStack st{{{p["substrate_index"], 0.0}, {p["n_si"], p["device_thickness"]}, {p["cladding_index"], 0.0}}, 1};
  st.validate();
  return st;
}

grating::GuidedIndexModel guided_model(const json& p) {
  return grating::slab_guided_model(p["device_thickness"], p["design_wavelength"], p["substrate_index"],
                                    p["cladding_index"]);
}

grating::MixingRule mixing_rule(const json& p) {
  return p["mixing_rule"] == "index" ? grating::index_mixing() : grating::permittivity_mixing();
}

struct Design {
  grating::GratingSpec spec;
  grating::ApodizationSchedule schedule;
  json calibration;  // empty unless calibrated
};

Design design_grating(const json& p, const fdtd::FdtdOptions& fo, Outputs* out) {
  Design d;
  d.spec = grating_spec(p);
  const auto stack = layer_stack(p);
  const auto model = guided_model(p);
  if (p.contains("calibrate_angles") && p["calibrate_angles"].get<bool>()) {
    if (p["mixing_rule"] != "permittivity")
      throw ValidationError("config.parameters.calibrate_angles: requires mixing_rule = permittivity");
    const auto cal = fdtd::calibrate_design_angles(stack, d.spec, model, p["grid_step"],
                                                   p["calibration_tolerance_deg"], p["calibration_iterations"], fo);
    d.spec.period_angle_deg = cal.period_angle_deg;
    d.schedule = cal.schedule;
    d.calibration = {{"iterations", cal.iterations},
                     {"converged", cal.converged},
                     {"emitted_angle_deg", cal.emitted_angle_deg},
                     {"max_local_error_deg", cal.max_local_error_deg},
                     {"period_angle_deg", cal.period_angle_deg}};
    if (out) {
      out->emit("calibration.csv", [&](const fs::path& f) {
        csv::Table t;
        t.header = {"period", "design_angle_deg"};
        for (std::size_t i = 0; i < cal.period_angle_deg.size(); ++i)
          t.rows.push_back({std::to_string(i + 1), format_double(cal.period_angle_deg[i])});
        csv::write(f, t);
      });
    }
  } else {
    d.schedule = grating::build_schedule(d.spec, model, mixing_rule(p));
  }
  return d;
}

fdtd::GratingProblem problem_for(const json& p, const grating::ApodizationSchedule& s) {
  return fdtd::make_problem(layer_stack(p), s, p["grid_step"], p["pml_cells"], p["courant"]);
}

fiber::FiberSpec fiber_spec(const json& p) {
  fiber::FiberSpec f;
  f.mode_field_diameter = p["mode_field_diameter"];
  f.n_fiber = p["n_fiber"];
  f.polish_angle_deg = p["polish_angle_deg"];
  f.validate();
  return f;
}

grating::EfficiencyBudget fixed_factors(const json& p, double directionality) {
  grating::EfficiencyBudget b;
  b.directionality_D = directionality;
  b.taper_transmission = p["taper_transmission"];
  b.interface_transmission = p["interface_transmission"];
  return b;
}

// ---- studies

json grating_study(const StudyConfig& c, Outputs& out, const RunOptions&) {
  const auto& p = c.parameters;
  const auto d = design_grating(p, {}, &out);
  out.emit("schedule.csv", [&](const fs::path& f) { grating::write_schedule_csv(f, d.schedule); });
  const auto b = grating::compose_budget(p["budget_directionality"], p["budget_overlap_x"], p["budget_overlap_y"],
                                         p["budget_taper"], p["budget_interface"]);
  out.emit("budget.csv", [&](const fs::path& f) {
    csv::Table t;
    t.header = {"factor", "value"};
    t.rows = {{"directionality", format_double(b.directionality_D)},
              {"overlap_x", format_double(b.overlap_x_Ox)},
              {"overlap_y", format_double(b.overlap_y_Oy)},
              {"taper", format_double(b.taper_transmission)},
              {"interface", format_double(b.interface_transmission)},
              {"eta", format_double(b.total_eta)}};
    csv::write(f, t);
  });
  std::ostringstream rep;
  rep << std::fixed << std::setprecision(4);
  rep << "periods            " << d.schedule.periods.size() << "\n";
  rep << "total length (um)  " << d.schedule.total_length() * 1e6 << "\n";
  rep << "first pitch (nm)   " << d.schedule.periods.front().pitch * 1e9 << "\n";
  rep << "last pitch (nm)    " << d.schedule.periods.back().pitch * 1e9 << "\n";
  rep << "first d/a          " << d.schedule.periods.front().hole_diameter / d.spec.lattice_constant_a << "\n";
  rep << "last d/a           " << d.schedule.periods.back().hole_diameter / d.spec.lattice_constant_a << "\n";
  rep << "eta = D*Ox*Oy*T*I  " << b.total_eta << "\n";
  out.text("report.txt", rep.str());

  std::vector<double> idx, pitch;
  for (std::size_t i = 0; i < d.schedule.periods.size(); ++i) {
    idx.push_back(static_cast<double>(i + 1));
    pitch.push_back(d.schedule.periods[i].pitch * 1e9);
  }
  out.emit("schedule.svg", [&](const fs::path& f) {
    write_svg(f, {"Apodization schedule", "period", "pitch (nm)", {{"pitch", idx, pitch, true}}});
  });
  return {{"eta_sim", b.total_eta},
          {"total_length_m", d.schedule.total_length()},
          {"first_pitch_m", d.schedule.periods.front().pitch},
          {"last_pitch_m", d.schedule.periods.back().pitch}};
}

json fdtd_study(const StudyConfig& c, Outputs& out, const RunOptions& ro) {
  const auto& p = c.parameters;
  const fdtd::FdtdOptions fo{ro.parallel > 1};
  const auto d = design_grating(p, fo, &out);
  out.emit("schedule.csv", [&](const fs::path& f) { grating::write_schedule_csv(f, d.schedule); });
  const auto prob = problem_for(p, d.schedule);

  const double lam0 = p["design_wavelength"];
  const double a = p["wavelength_start"], b = p["wavelength_stop"], step = p["wavelength_step"];
  if (!(a > 0.0 && b > a && step > 0.0)) throw ValidationError("config.parameters.wavelength_*: need 0 < start < stop, step > 0");
  std::vector<double> wl;
  const int n = static_cast<int>(std::floor((b - a) / step + 1e-9)) + 1;
  for (int i = 0; i < n; ++i) wl.push_back(a + i * step);
  wl.push_back(lam0);  // design point last

  const auto run = fdtd::run_fdtd(prob, wl, fo);
  const auto& design = run.reports.back();
  const auto& field = run.upper_fields.back();

  fiber::CouplingModel cm(fiber_spec(p), field, p["waveguide_width"], fixed_factors(p, design.up_fraction));
  const auto nominal = cm.couple();

  std::vector<double> lam_nm, dvec, rvec, tvec, eta, ang, ox;
  csv::Table t;
  t.header = {"wavelength_nm", "directionality", "reflection", "transmission", "down", "angle_deg", "overlap_x", "eta"};
  for (std::size_t i = 0; i + 1 < wl.size(); ++i) {
    const auto& r = run.reports[i];
    auto plane = cm.plane();
    plane.wavelength = wl[i];
    const double o = fiber::overlap(fiber::pad_field(run.upper_fields[i], 30e-6), fiber::fiber_mode(cm.fiber(), {}, plane));
    const double e = r.up_fraction * o * nominal.budget.overlap_y_Oy * nominal.budget.taper_transmission *
                     nominal.budget.interface_transmission;
    const double th = fdtd::extract_diffraction_angle(run.upper_fields[i]);
    lam_nm.push_back(wl[i] * 1e9);
    dvec.push_back(r.up_fraction);
    rvec.push_back(r.reflected_fraction);
    tvec.push_back(r.transmitted_fraction);
    eta.push_back(e);
    ang.push_back(th);
    ox.push_back(o);
    t.rows.push_back({format_double(wl[i] * 1e9), format_double(r.up_fraction), format_double(r.reflected_fraction),
                      format_double(r.transmitted_fraction), format_double(r.down_fraction), format_double(th),
                      format_double(o), format_double(e)});
  }
  out.emit("spectrum.csv", [&](const fs::path& f) { csv::write(f, t); });
  const auto bw = spectra::db_bandwidth(std::vector<double>(wl.begin(), wl.end() - 1), eta, 1.0);
  out.emit("spectrum.svg", [&](const fs::path& f) {
    write_svg(f, {"Grating spectrum", "wavelength (nm)", "fraction",
                  {{"D", lam_nm, dvec}, {"R", lam_nm, rvec}, {"eta (fixed fiber)", lam_nm, eta}}});
  });
  if (p["write_fields"].get<bool>()) {
    out.emit("field_design.bin", [&](const fs::path& f) { fdtd::write_field_binary(f, field); });
    out.emit("field_design.csv", [&](const fs::path& f) { fdtd::write_field_csv(f, field); });
    out.emit("permittivity.bin", [&](const fs::path& f) {
      fdtd::write_permittivity_binary(f, fdtd::build_permittivity(layer_stack(p), d.schedule, prob.domain, prob.layout));
    });
  }
  const double angle = fdtd::extract_diffraction_angle(field);
  std::ostringstream rep;
  rep << std::fixed << std::setprecision(4);
  rep << "wavelength (nm)        " << lam0 * 1e9 << "\n";
  rep << "directionality D       " << design.up_fraction << "\n";
  rep << "reflection R           " << design.reflected_fraction << "\n";
  rep << "transmission           " << design.transmitted_fraction << "\n";
  rep << "down                   " << design.down_fraction << "\n";
  rep << "diffraction angle (deg)" << " " << angle << "\n";
  rep << "O_x / O_y              " << nominal.budget.overlap_x_Ox << " / " << nominal.budget.overlap_y_Oy << "\n";
  rep << "eta                    " << nominal.eta << "\n";
  rep << "1 dB bandwidth (nm)    " << bw.width() * 1e9 << "  [" << bw.lower * 1e9 << ", " << bw.upper * 1e9 << "]\n";
  rep << "time steps             " << run.steps << (run.shutoff_converged ? "" : "  (shutoff not reached)") << "\n";
  out.text("report.txt", rep.str());

  json r{{"directionality", design.up_fraction},
         {"reflection", design.reflected_fraction},
         {"transmission", design.transmitted_fraction},
         {"angle_deg", angle},
         {"overlap_x", nominal.budget.overlap_x_Ox},
         {"overlap_y", nominal.budget.overlap_y_Oy},
         {"eta", nominal.eta},
         {"bandwidth_1db_m", bw.width()},
         {"peak_wavelength_m", bw.peak_wavelength},
         {"shutoff_converged", run.shutoff_converged}};
  if (!d.calibration.is_null()) r["calibration"] = d.calibration;
  return r;
}

json align_study(const StudyConfig& c, Outputs& out, const RunOptions& ro) {
  const auto& p = c.parameters;
  const fdtd::FdtdOptions fo{ro.parallel > 1};
  fdtd::FieldMap2D field;
  double dgc = 0.0;
  const std::string ff = p["field_file"];
  if (!ff.empty()) {
    dgc = p["directionality"];
    if (!(dgc > 0.0 && dgc <= 1.0))
      throw ValidationError("config.parameters.directionality: must be in (0, 1] when field_file is set");
    field = fs::path(ff).extension() == ".csv" ? fdtd::read_field_csv(ff) : fdtd::read_field_binary(ff);
  } else {
    const auto d = design_grating(p, fo, &out);
    const auto run = fdtd::run_fdtd(problem_for(p, d.schedule), {p["design_wavelength"].get<double>()}, fo);
    field = run.upper_fields[0];
    dgc = run.reports[0].up_fraction;
  }
  const auto fs_ = fiber_spec(p);
  fiber::CouplingModel cm(fs_, field, p["waveguide_width"], fixed_factors(p, dgc));
  const auto nominal = cm.couple();
  json r{{"directionality", dgc},
         {"eta", nominal.eta},
         {"overlap_x", nominal.budget.overlap_x_Ox},
         {"overlap_y", nominal.budget.overlap_y_Oy},
         {"nominal_angle_deg", cm.nominal_angle_deg()},
         {"incidence_angle_deg", fiber::incidence_angle_from_polish(fs_.polish_angle_deg, fs_.n_fiber)}};

  const int steps = p["steps"];
  const double tr = p["translation_range"], hr = p["height_range"], ar = p["angle_range_deg"];
  for (const auto& name : p["dofs"].get<std::vector<std::string>>()) {
    const auto dof = fiber::parse_dof(name);
    double lo = -tr, hi = tr;
    if (dof == fiber::Dof::z) lo = 0.0, hi = hr;
    if (fiber::is_angular(dof)) lo = -ar, hi = ar;
    const auto curve = fiber::tolerance_sweep(cm, dof, lo, hi, steps);
    out.emit("sweep_" + name + ".csv", [&](const fs::path& f) { fiber::write_curve_csv(f, curve); });
    const double unit = fiber::is_angular(dof) ? 1.0 : 1e6;
    PlotSpec ps{"Alignment tolerance: " + name, fiber::is_angular(dof) ? name + " (deg)" : name + " (um)", "eta",
                {{"simulated", scaled(curve.offsets, unit), curve.eta, true}}};
    json jr{{"peak", *std::max_element(curve.eta.begin(), curve.eta.end())}};
    if (dof == fiber::Dof::x || dof == fiber::Dof::y) {
      const auto g = fiber::fit_gaussian_diameter(curve.offsets, curve.eta);
      jr["gaussian_diameter_m"] = g.diameter;
      jr["gaussian_center_m"] = g.center;
      std::vector<double> fit;
      for (double x : curve.offsets) fit.push_back(g.peak * std::exp(-8.0 * (x - g.center) * (x - g.center) / (g.diameter * g.diameter)));
      std::ostringstream lab;
      lab << std::fixed << std::setprecision(2) << "Gaussian fit, 1/e^2 diameter " << g.diameter * 1e6 << " um";
      ps.series.push_back({lab.str(), scaled(curve.offsets, unit), fit});
    }
    if (dof != fiber::Dof::z) {
      const double u = fiber::is_angular(dof) ? 1.0 : 1e-6;
      const auto s3 = fiber::tolerance_sweep(cm, dof, -u, u, 3);
      jr["ratio_at_unit_offset"] = std::min(s3.eta[0], s3.eta[2]) / s3.eta[1];
    }
    out.emit("sweep_" + name + ".svg", [&](const fs::path& f) { write_svg(f, ps); });
    r["sweeps"][name] = jr;
  }

  const auto heights = linspace(0.0, hr, std::max(2, steps / 4));
  const auto z = fiber::z_dependence(cm, heights);
  out.emit("z_dependence.csv", [&](const fs::path& f) {
    csv::Table t;
    t.header = {"height_m", "eta", "overlap_x", "overlap_y"};
    for (std::size_t i = 0; i < z.heights.size(); ++i)
      t.rows.push_back({format_double(z.heights[i]), format_double(z.eta[i]), format_double(z.overlap_x[i]),
                        format_double(z.overlap_y[i])});
    csv::write(f, t);
  });

  std::ostringstream rep;
  rep << std::fixed << std::setprecision(4);
  rep << "eta                       " << nominal.eta << "\n";
  rep << "D / O_x / O_y             " << dgc << " / " << nominal.budget.overlap_x_Ox << " / "
      << nominal.budget.overlap_y_Oy << "\n";
  rep << "beam angle (deg)          " << cm.nominal_angle_deg() << "\n";
  rep << "polish incidence (deg)    " << r["incidence_angle_deg"].get<double>() << "\n";
  for (const auto& [name, jr] : r["sweeps"].items()) {
    if (jr.contains("gaussian_diameter_m"))
      rep << name << " 1/e^2 diameter (um)     " << jr["gaussian_diameter_m"].get<double>() * 1e6 << "\n";
    if (jr.contains("ratio_at_unit_offset"))
      rep << name << " eta/peak at 1 unit      " << jr["ratio_at_unit_offset"].get<double>() << "\n";
  }
  out.text("report.txt", rep.str());
  return r;
}

json spectrum_study(const StudyConfig& c, Outputs& out, const RunOptions&) {
  const auto& p = c.parameters;
  spectra::CavitySpec cav{p["resonance_wavelength"], p["quality_factor"], p["coupling_ratio"]};
  cav.validate();
  const int n = p["points"];
  const double span = p["span_linewidths"].get<double>() * cav.linewidth();
  const double noise = p["noise"];
  if (n < 20) throw ValidationError("config.parameters.points: need at least 20");
  if (!(noise >= 0.0)) throw ValidationError("config.parameters.noise: must be >= 0");
  auto eng = rng::stream(c.seed, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  spectra::ReflectionSpectrum s;
  s.wavelengths = linspace(cav.resonance_wavelength - span / 2, cav.resonance_wavelength + span / 2, n);
  for (double l : s.wavelengths) s.reflectance.push_back(spectra::cavity_reflectance(cav, l) + noise * gauss(eng));
  out.emit("cavity.csv", [&](const fs::path& f) {
    csv::Table t;
    t.comments = seed_comment(c.seed);
    t.header = {"wavelength_nm", "reflectance"};
    for (std::size_t i = 0; i < s.wavelengths.size(); ++i)
      t.rows.push_back({format_double(s.wavelengths[i] * 1e9), format_double(s.reflectance[i])});
    csv::write(f, t);
  });
  const auto fit = spectra::fit_lorentzian(s);
  out.text("fit.txt", spectra::format_fit_report(fit));
  spectra::CavitySpec fitted{fit.resonance_wavelength, fit.quality_factor, fit.coupling_ratio};
  std::vector<double> model;
  for (double l : s.wavelengths) model.push_back(fit.baseline * spectra::cavity_reflectance(fitted, l));
  out.emit("cavity.svg", [&](const fs::path& f) {
    write_svg(f, {"Cavity reflection", "wavelength (nm)", "R",
                  {{"data", scaled(s.wavelengths, 1e9), s.reflectance, true}, {"fit", scaled(s.wavelengths, 1e9), model}}});
  });

  const double rgc = p["gc_reflectivity"];
  spectra::FringeSpec fr;
  fr.gc_reflectivity = [rgc](double) { return rgc; };
  fr.path_length = p["path_length"];
  fr.group_index = p["group_index"];
  fr.coupling_efficiency = p["coupling_efficiency"];
  const double fspan = p["fringe_span"];
  const auto fl = linspace(cav.resonance_wavelength - fspan / 2, cav.resonance_wavelength + fspan / 2, p["fringe_points"]);
  const auto fs_ = spectra::fringe_spectrum(fr, cav, fl);
  // efficiency view sqrt(R)
  spectra::ReflectionSpectrum eta_s{fs_.wavelengths, {}};
  for (double v : fs_.reflectance) eta_s.reflectance.push_back(spectra::eta_from_reflection(v));
  out.emit("fringes.csv", [&](const fs::path& f) {
    csv::Table t;
    t.header = {"wavelength_nm", "reflectance", "eta"};
    for (std::size_t i = 0; i < fl.size(); ++i)
      t.rows.push_back({format_double(fl[i] * 1e9), format_double(fs_.reflectance[i]), format_double(eta_s.reflectance[i])});
    csv::write(f, t);
  });
  out.emit("fringes.svg", [&](const fs::path& f) {
    write_svg(f, {"Fabry-Perot fringes", "wavelength (nm)", "eta = sqrt(R)", {{"eta", scaled(fl, 1e9), eta_s.reflectance}}});
  });
  const double lo = cav.resonance_wavelength + 2e-9, hi = cav.resonance_wavelength + fspan / 2;
  const double period = spectra::measure_fringe_period(fs_, lo, hi);
  const double expect = spectra::fringe_period(0.5 * (lo + hi), fr.group_index, fr.path_length);
  const double half_eta = spectra::fringe_half_amplitude(eta_s, lo, hi);

  std::ostringstream rep;
  rep << std::setprecision(6);
  rep << "fringe period (nm)      " << period * 1e9 << "  (lambda^2/(2 n_g L) = " << expect * 1e9 << ")\n";
  rep << "sample spacing (nm)     " << (fl[1] - fl[0]) * 1e9 << "\n";
  rep << "eta fringe amplitude    +/-" << half_eta << "\n";
  rep << "fitted Q                " << fit.quality_factor << "\n";
  out.text("report.txt", rep.str());
  return {{"fringe_period_m", period},
          {"fringe_period_expected_m", expect},
          {"fringe_sample_spacing_m", fl[1] - fl[0]},
          {"eta_fringe_half_amplitude", half_eta},
          {"fit_resonance_m", fit.resonance_wavelength},
          {"fit_quality_factor", fit.quality_factor},
          {"fit_coupling_ratio", fit.coupling_ratio},
          {"fit_baseline", fit.baseline}};
}

json cpw_study(const StudyConfig& c, Outputs& out, const RunOptions&) {
  const auto& p = c.parameters;
  mw::CpwGeometry g;
  g.center_width = p["center_width"];
  g.gap = p["gap"];
  g.ground_width = p["ground_width"];
  g.metal_thickness = p["metal_thickness"];
  g.standoff_dz = p["standoff"];
  g.characteristic_impedance = p["impedance"];
  g.grounds = p["grounds"] == "symmetric" ? mw::GroundLayout::symmetric : mw::GroundLayout::single_sided;
  g.distribution = p["distribution"] == "edge_weighted" ? mw::CurrentDistribution::edge_weighted
                                                        : mw::CurrentDistribution::uniform;
  g.filaments = p["filaments"];
  g.thickness_layers = p["thickness_layers"];
  g.validate();
  const double P = p["power"];
  const auto dz = p["profile_dz"].get<std::vector<double>>();
  const auto prof = mw::field_profile(g, P, dz);
  out.emit("field_profile.csv", [&](const fs::path& f) {
    csv::Table t;
    t.header = {"dz_m", "B_G", "theta_deg", "phi_deg"};
    for (std::size_t i = 0; i < dz.size(); ++i)
      t.rows.push_back({format_double(dz[i]), format_double(prof[i].magnitude_B), format_double(prof[i].polar_theta_deg),
                        format_double(prof[i].azimuth_phi_deg)});
    csv::write(f, t);
  });
  std::vector<double> bm;
  for (const auto& v : prof) bm.push_back(v.magnitude_B);
  out.emit("field_profile.svg", [&](const fs::path& f) {
    write_svg(f, {"AC field above the pin", "dz (um)", "|B| (G)", {{"|B|", scaled(dz, 1e6), bm, true}}});
  });
  const double hw = p["map_half_width"];
  const int mp = p["map_points"];
  std::vector<Eigen::Vector3d> pts;
  for (double z : linspace(10e-6, 2.0 * g.standoff_dz, mp))
    for (double x : linspace(-hw, hw, mp)) pts.emplace_back(x, 0.0, z);
  out.emit("field_map.csv", [&](const fs::path& f) { mw::write_field_map_csv(f, g, P, pts); });

  const auto at = mw::field_at_point(g, P, {0.0, 0.0, g.standoff_dz});
  const auto at4 = mw::field_at_point(g, 4.0 * P, {0.0, 0.0, g.standoff_dz});
  const double sqrt_err = std::abs(at4.magnitude_B / at.magnitude_B - 2.0) / 2.0;

  spin::PulseSequence seq;
  seq.kind = spin::PulseSequence::Kind::cpmg;
  seq.pi_pulse_count = p["pulse_count"];
  seq.pi_duration = p["pi_duration"];
  seq.pulse_peak_power = p["peak_power"];
  seq.repetition_period = p["repetition_period"];
  const auto duty = mw::duty_cycle_power(seq, seq.pulse_peak_power);
  mw::ThermalModel tm;
  tm.slope_mk_per_mw = p["heating_slope_mk_per_mw"];
  tm.stage_cooling_power = p["stage_cooling_power"];
  const auto heat = mw::heating(tm, duty.average_power_mw);

  std::ostringstream rep;
  rep << std::setprecision(6);
  rep << "peak current at P (A)    " << mw::peak_current(P, g.characteristic_impedance) << "\n";
  rep << "peak current at 20 W (A) " << mw::peak_current(20.0, g.characteristic_impedance) << "\n";
  rep << "B at standoff (G)        " << at.magnitude_B << "  theta " << at.polar_theta_deg << "  phi "
      << at.azimuth_phi_deg << "\n";
  rep << "duty cycle               " << duty.duty << "\n";
  rep << "average power (mW)       " << duty.average_power_mw << "\n";
  rep << "heating (mK)             " << heat.rise_mk << "  (stage bound " << heat.naive_bound_mk << ")\n";
  out.text("report.txt", rep.str());
  return {{"peak_current_A", mw::peak_current(P, g.characteristic_impedance)},
          {"peak_current_20W_A", mw::peak_current(20.0, g.characteristic_impedance)},
          {"field_G", at.magnitude_B},
          {"theta_deg", at.polar_theta_deg},
          {"phi_deg", at.azimuth_phi_deg},
          {"sqrt_power_error", sqrt_err},
          {"duty", duty.duty},
          {"average_power_mW", duty.average_power_mw},
          {"heating_mK", heat.rise_mk},
          {"naive_bound_mK", heat.naive_bound_mk}};
}

const std::vector<std::pair<double, double>> icosahedral_axes{{31.7175, 90.0}, {31.7175, -90.0}, {90.0, 58.2825},
                                                              {90.0, 121.7175}, {58.2825, 0.0}, {58.2825, 180.0}};

json spin_study(const StudyConfig& c, Outputs& out, const RunOptions&) {
  const auto& p = c.parameters;
  const mw::AcFieldVector ac{p["ac_field"], p["ac_theta_deg"], p["ac_phi_deg"], 1.0, p["transition_frequency"]};
  const double drive = p["drive_power"];
  spin::SpinSystem sp;
  sp.transition_frequency = p["transition_frequency"];
  sp.quantization_axis = spin::axis_from_angles(p["static_theta_deg"], p["static_phi_deg"]);
  sp.gyromagnetic_gamma = spin::effective_gamma_for_pi_time(p["pi_time"], ac.at_power(drive), sp.quantization_axis);
  if (p["t1"].get<double>() > 0.0) sp.T1 = p["t1"];
  if (p["t2"].get<double>() > 0.0) sp.T2_intrinsic = p["t2"];
  const double f_r = spin::rabi_frequency(sp, ac.at_power(drive));
  json r{{"gamma_hz_per_gauss", sp.gyromagnetic_gamma}, {"rabi_hz", f_r}, {"pi_time_s", 0.5 / f_r},
         {"static_field_G", p["static_field"]}};
  std::ostringstream rep;
  rep << std::setprecision(6);
  rep << "effective gamma (Hz/G)   " << sp.gyromagnetic_gamma << "\n";
  rep << "Rabi frequency (Hz)      " << f_r << "\n";

  for (const auto& ex : p["experiments"].get<std::vector<std::string>>()) {
    if (ex == "rabi") {
      const auto t = linspace(0.0, p["rabi_cycles"].get<double>() / f_r, p["rabi_points"]);
      const auto pop = spin::rabi_trace(sp, f_r, t);
      out.emit("rabi.csv", [&](const fs::path& f) {
        csv::Table tb;
        tb.header = {"time_s", "population_up"};
        for (std::size_t i = 0; i < t.size(); ++i) tb.rows.push_back({format_double(t[i]), format_double(pop[i])});
        csv::write(f, tb);
      });
      out.emit("rabi.svg", [&](const fs::path& f) {
        write_svg(f, {"Rabi oscillation", "time (ns)", "P(up)", {{"P", scaled(t, 1e9), pop}}});
      });
      r["rabi"] = {{"cycle_residual", spin::rabi_trace(sp, f_r, {1.0 / f_r})[0]}};
    } else if (ex == "odmr") {
      const double span = p["odmr_span"];
      const auto det = linspace(-span / 2, span / 2, p["odmr_points"]);
      const double tp = 0.5 / f_r;
      const auto con = spin::odmr_spectrum(sp, f_r, tp, det);
      double worst = 0.0;
      std::vector<double> ana;
      for (std::size_t i = 0; i < det.size(); ++i) {
        ana.push_back(spin::rabi_formula(f_r, det[i], tp));
        worst = std::max(worst, std::abs(ana.back() - con[i]));
      }
      out.emit("odmr.csv", [&](const fs::path& f) {
        csv::Table tb;
        tb.header = {"detuning_hz", "contrast", "analytic"};
        for (std::size_t i = 0; i < det.size(); ++i)
          tb.rows.push_back({format_double(det[i]), format_double(con[i]), format_double(ana[i])});
        csv::write(f, tb);
      });
      out.emit("odmr.svg", [&](const fs::path& f) {
        write_svg(f, {"ODMR, pi pulse", "detuning (MHz)", "contrast",
                      {{"Bloch", scaled(det, 1e-6), con, true}, {"Rabi formula", scaled(det, 1e-6), ana}}});
      });
      const auto bw = spectra::db_bandwidth(det, con, 10.0 * std::log10(2.0));
      r["odmr"] = {{"max_analytic_deviation", worst}, {"fwhm_hz", bw.width()}};
      rep << "ODMR FWHM (Hz)           " << bw.width() << "\n";
    } else if (ex == "cpmg") {
      spin::NoiseBath bath;
      const std::string kind = p["bath"];
      bath.kind = kind == "ornstein_uhlenbeck" ? spin::NoiseBath::Kind::ornstein_uhlenbeck
                  : kind == "quasi_static"     ? spin::NoiseBath::Kind::quasi_static
                                               : spin::NoiseBath::Kind::power_law;
      bath.sigma = p["bath_sigma"];
      bath.correlation_time = p["bath_correlation_time"];
      bath.low_cutoff = p["bath_low_cutoff"];
      bath.high_cutoff = p["bath_high_cutoff"];
      bath.seed = c.seed;
      const auto counts = p["pulse_counts"].get<std::vector<int>>();
      if (bath.kind == spin::NoiseBath::Kind::power_law) {
        const double s = p["bath_exponent"];
        bath.spectral_exponent = s > 0.0 ? s : spin::power_law_exponent_for_alpha(p["alpha_target"], bath, counts);
        r["cpmg_spectral_exponent"] = bath.spectral_exponent;
      }
      bath.validate();
      spin::CpmgOptions co;
      co.trajectories = p["trajectories"];
      const int npts = p["cpmg_points"];
      std::vector<double> nv, t2v, t2o;
      csv::Table summary;
      summary.comments = seed_comment(c.seed);
      summary.header = {"pulse_count", "t2_s", "beta", "oracle_t2_s"};
      std::string warnings;
      for (int n : counts) {
        std::vector<double> times;
        double oracle = 0.0;
        if (bath.kind == spin::NoiseBath::Kind::quasi_static || bath.sigma == 0.0) {
          times = linspace(0.0, 1e-3, npts);
        } else {
          oracle = spin::oracle_t2(bath, n);
          for (int i = 0; i < npts; ++i) times.push_back(oracle * 0.5 * std::pow(1.4 / 0.5, npts > 1 ? i / (npts - 1.0) : 0.0));
        }
        const auto tr = spin::cpmg_coherence(sp, bath, n, times, co);
        if (!tr.warning.empty()) warnings += "N=" + std::to_string(n) + ": " + tr.warning + "\n";
        out.emit("cpmg_N" + std::to_string(n) + ".csv", [&](const fs::path& f) {
          csv::Table tb;
          tb.comments = seed_comment(c.seed);
          tb.header = {"evolution_time_s", "coherence", "standard_error"};
          for (std::size_t i = 0; i < times.size(); ++i)
            tb.rows.push_back({format_double(times[i]), format_double(tr.coherence[i]), format_double(tr.standard_error[i])});
          csv::write(f, tb);
        });
        if (oracle > 0.0) {
          const auto se = spin::fit_stretched_exponential(tr);
          nv.push_back(n);
          t2v.push_back(se.t2);
          t2o.push_back(oracle);
          summary.rows.push_back({std::to_string(n), format_double(se.t2), format_double(se.beta), format_double(oracle)});
        }
      }
      if (!warnings.empty()) out.text("cpmg_warnings.txt", warnings);
      if (nv.size() >= 3) {
        const auto pf = spin::fit_t2_power_law(nv, t2v);
        const double unit = p["t2_units"];
        out.emit("cpmg_t2.csv", [&](const fs::path& f) { csv::write(f, summary); });
        std::vector<double> fitline;
        for (double n : nv) fitline.push_back(pf.amplitude * std::pow(n, pf.exponent) / unit);
        out.emit("cpmg_t2.svg", [&](const fs::path& f) {
          PlotSpec ps{"T2 scaling with pulse count", "N", "T2", {{"Monte Carlo", nv, scaled(t2v, 1.0 / unit), true},
                                                                 {"A N^alpha", nv, fitline}}};
          ps.log_x = ps.log_y = true;
          write_svg(f, ps);
        });
        r["cpmg"] = {{"alpha", pf.exponent}, {"alpha_sigma", pf.exponent_sigma}, {"A", pf.amplitude / unit},
                     {"A_sigma", pf.amplitude_sigma / unit}, {"t2_units_s", unit}};
        rep << "CPMG alpha               " << pf.exponent << " +/- " << pf.exponent_sigma << "\n";
        rep << "CPMG A (units of " << unit << " s) " << pf.amplitude / unit << "\n";
      }
    } else if (ex == "readout") {
      spin::ReadoutParams rp;
      rp.cycles_per_transition = p["readout_cycles"];
      rp.photons_per_excitation = p["readout_photons"];
      rp.detection_efficiency = p["readout_efficiency"];
      rp.dark_rate = p["readout_dark_rate"];
      rp.cycle_duration = p["readout_cycle_time"];
      rp.spin_flip_probability = p["readout_flip_probability"];
      rp.reinitialize_each_window = true;
      const int shots = p["readout_shots"];
      const auto trace = spin::readout_monte_carlo(rp, shots * rp.window_duration(), c.seed);
      out.emit("readout_trace.csv", [&](const fs::path& f) {
        csv::Table tb;
        tb.comments = seed_comment(c.seed);
        tb.header = {"time_s", "counts_A", "counts_B", "true_up"};
        for (std::size_t i = 0; i < trace.time_bins.size(); ++i)
          tb.rows.push_back({format_double(trace.time_bins[i]), std::to_string(trace.counts_A[i]),
                             std::to_string(trace.counts_B[i]), trace.true_state_up[i] ? "1" : "0"});
        csv::write(f, tb);
      });
      const int tmax = static_cast<int>(std::ceil(rp.bright_mean() + 4.0 * std::sqrt(rp.bright_mean()))) + 1;
      std::vector<double> th, mc, orc;
      double worst = 0.0;
      for (int t = 0; t <= tmax; ++t) {
        th.push_back(t);
        mc.push_back(spin::classify_state(trace, t).fidelity);
        orc.push_back(spin::poisson_discrimination_fidelity(rp.bright_mean(), rp.dark_mean(), t));
        worst = std::max(worst, std::abs(mc.back() - orc.back()));
      }
      out.emit("readout_threshold.csv", [&](const fs::path& f) {
        csv::Table tb;
        tb.comments = seed_comment(c.seed);
        tb.header = {"threshold", "fidelity", "oracle_fidelity"};
        for (std::size_t i = 0; i < th.size(); ++i)
          tb.rows.push_back({format_double(th[i]), format_double(mc[i]), format_double(orc[i])});
        csv::write(f, tb);
      });
      out.emit("readout_threshold.svg", [&](const fs::path& f) {
        write_svg(f, {"Readout fidelity", "threshold (counts)", "fidelity",
                      {{"Monte Carlo", th, mc, true}, {"two-Poisson oracle", th, orc}}});
      });
      const int best = spin::optimal_threshold(rp.bright_mean(), rp.dark_mean());
      r["readout"] = {{"optimal_threshold", best},
                      {"fidelity", spin::classify_state(trace, best).fidelity},
                      {"oracle_fidelity", spin::poisson_discrimination_fidelity(rp.bright_mean(), rp.dark_mean(), best)},
                      {"max_oracle_deviation", worst}};
      rep << "readout fidelity         " << r["readout"]["fidelity"].get<double>() << " at threshold " << best << "\n";
    } else if (ex == "tomography") {
      std::vector<spin::RabiMeasurement> ms;
      for (auto [t, ph] : icosahedral_axes) ms.push_back({t, ph, 0.0});
      const auto model = spin::tomography_model(ac, sp, ms);
      auto eng = rng::stream(c.seed, 2);
      std::normal_distribution<double> gauss(0.0, 1.0);
      const double nz = p["tomography_noise"];
      for (std::size_t i = 0; i < ms.size(); ++i) ms[i].rabi_hz = model[i] * (1.0 + nz * gauss(eng));
      const auto fit = spin::tomography_fit(ms, sp, 1.0);
      const auto refit = spin::tomography_model(fit.field, sp, ms);
      out.emit("tomography.csv", [&](const fs::path& f) {
        csv::Table tb;
        tb.comments = seed_comment(c.seed);
        tb.header = {"static_theta_deg", "static_phi_deg", "rabi_measured_hz", "rabi_fit_hz"};
        for (std::size_t i = 0; i < ms.size(); ++i)
          tb.rows.push_back({format_double(ms[i].static_theta_deg), format_double(ms[i].static_phi_deg),
                             format_double(ms[i].rabi_hz), format_double(refit[i])});
        csv::write(f, tb);
      });
      r["tomography"] = {{"B_G", fit.field.magnitude_B},
                         {"theta_deg", fit.field.polar_theta_deg},
                         {"phi_deg", fit.field.azimuth_phi_deg},
                         {"B_sigma_G", std::sqrt(fit.covariance(0, 0))}};
      rep << "tomography (G, deg, deg) " << fit.field.magnitude_B << ", " << fit.field.polar_theta_deg << ", "
          << fit.field.azimuth_phi_deg << "\n";
    }
  }
  out.text("report.txt", rep.str());
  return r;
}

}  // namespace

json manifest_json(const RunManifest& m) {
  json j{{"study", m.study},
         {"config_hash", m.config_hash},
         {"toolkit_version", m.toolkit_version},
         {"started_utc", m.started_utc},
         {"finished_utc", m.finished_utc},
         {"wall_clock_seconds", m.wall_clock_seconds},
         {"seed", m.seed},
         {"outputs", m.outputs},
         {"complete", m.complete}};
  if (!m.error.empty()) j["error"] = m.error;
  return j;
}

RunManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest: " + path.string());
  const auto j = json::parse(in);
  RunManifest m;
  m.study = j.at("study");
  m.config_hash = j.at("config_hash");
  m.toolkit_version = j.at("toolkit_version");
  m.started_utc = j.at("started_utc");
  m.finished_utc = j.at("finished_utc");
  m.wall_clock_seconds = j.at("wall_clock_seconds");
  m.seed = j.at("seed");
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  m.complete = j.at("complete");
  if (j.contains("error")) m.error = j["error"];
  return m;
}

RunManifest run_study(const StudyConfig& c, const RunOptions& ro) {
  if (ro.parallel < 1) throw ValidationError("--parallel must be >= 1");
  std::error_code ec;
  fs::create_directories(c.output_directory, ec);
  if (ec || !fs::is_directory(c.output_directory))
    throw ValidationError("output directory not writable: " + c.output_directory.string());
  omp_set_num_threads(ro.parallel);

  RunManifest m;
  m.study = study_name(c.kind);
  m.config_hash = config_hash(c);
  m.toolkit_version = toolkit_version;
  m.seed = c.seed;
  m.started_utc = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  Outputs out(c.output_directory, m.outputs);

  auto finish = [&] {
    m.finished_utc = utc_now();
    m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(c.output_directory / "manifest.json", manifest_json(m).dump(2) + "\n");
  };
  try {
    out.text("config.json", canonical_text(c));
    switch (c.kind) {
      case StudyKind::grating: m.results = grating_study(c, out, ro); break;
      case StudyKind::fdtd: m.results = fdtd_study(c, out, ro); break;
      case StudyKind::align: m.results = align_study(c, out, ro); break;
      case StudyKind::spectrum: m.results = spectrum_study(c, out, ro); break;
      case StudyKind::cpw: m.results = cpw_study(c, out, ro); break;
      case StudyKind::spin: m.results = spin_study(c, out, ro); break;
    }
    out.text("results.json", m.results.dump(2) + "\n");
    m.complete = true;
  } catch (const std::exception& e) {
    m.complete = false;
    m.error = e.what();
    finish();
    throw;
  }
  finish();
  return m;
}

}  // namespace hprobe::cli
