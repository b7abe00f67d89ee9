#include "hprobe/cli/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hprobe/core/error.hpp"

namespace hprobe::cli {

using nlohmann::json;

StudyKind parse_study_kind(const std::string& name) {
  static const std::map<std::string, StudyKind> kinds{{"grating", StudyKind::grating}, {"fdtd", StudyKind::fdtd},
                                                      {"align", StudyKind::align},     {"spectrum", StudyKind::spectrum},
                                                      {"cpw", StudyKind::cpw},         {"spin", StudyKind::spin}};
  const auto it = kinds.find(name);
  if (it == kinds.end()) {
    std::vector<std::string> names;
    for (const auto& [k, v] : kinds) names.push_back(k);
    throw ValidationError("unknown study '" + name + "'; nearest valid study is '" + nearest_key(name, names) + "'");
  }
  return it->second;
}

std::string study_name(StudyKind k) {
  switch (k) {
    case StudyKind::grating: return "grating";
    case StudyKind::fdtd: return "fdtd";
    case StudyKind::align: return "align";
    case StudyKind::spectrum: return "spectrum";
    case StudyKind::cpw: return "cpw";
    case StudyKind::spin: return "spin";
  }
  return "?";
}

namespace {

ParamSpec num(double v, std::string help) { return {ParamType::number, v, {}, std::move(help)}; }
ParamSpec integer(long v, std::string help) { return {ParamType::integer, v, {}, std::move(help)}; }
ParamSpec boolean(bool v, std::string help) { return {ParamType::boolean, v, {}, std::move(help)}; }
ParamSpec str(std::string v, std::vector<std::string> choices, std::string help) {
  return {ParamType::string, v, std::move(choices), std::move(help)};
}
ParamSpec nums(std::vector<double> v, std::string help) { return {ParamType::number_array, v, {}, std::move(help)}; }
ParamSpec ints(std::vector<long> v, std::string help) { return {ParamType::integer_array, v, {}, std::move(help)}; }
ParamSpec strs(std::vector<std::string> v, std::vector<std::string> choices, std::string help) {
  return {ParamType::string_array, v, std::move(choices), std::move(help)};
}

void add_grating(Schema& s) {
  s["lattice_constant"] = num(215e-9, "SWG lattice constant a, m");
  s["n_si"] = num(3.48, "silicon index");
  s["n_fill"] = num(1.0, "hole fill index");
  s["first_period_index"] = num(3.05, "SWG index of the first period");
  s["index_step"] = num(-0.054, "SWG index change per period");
  s["period_count"] = integer(20, "number of grating periods");
  s["duty_cycle"] = num(0.5, "SWG fraction of each pitch");
  s["design_wavelength"] = num(1536e-9, "m");
  s["target_angle_deg"] = num(11.3, "emission angle from the normal");
  s["waveguide_width"] = num(12.6e-6, "grating width w_y, m");
  s["device_thickness"] = num(220e-9, "silicon thickness, m");
  s["substrate_index"] = num(1.78, "substrate index");
  s["cladding_index"] = num(1.0, "cladding index");
  s["mixing_rule"] = str("permittivity", {"permittivity", "index"}, "hole effective-index rule");
  s["period_angle_deg"] = nums({}, "per-period design angles; empty = target_angle_deg everywhere");
}

void add_fdtd(Schema& s) {
  s["grid_step"] = num(20e-9, "Yee cell size, m");
  s["pml_cells"] = integer(10, "CPML thickness in cells");
  s["courant"] = num(0.5, "Courant factor (<= 1/sqrt(2))");
  s["calibrate_angles"] = boolean(false, "run the FDTD design-angle calibration first");
  s["calibration_tolerance_deg"] = num(0.25, "calibration convergence tolerance");
  s["calibration_iterations"] = integer(6, "maximum calibration passes");
}

void add_fiber(Schema& s) {
  s["mode_field_diameter"] = num(10.4e-6, "fiber MFD, m");
  s["n_fiber"] = num(1.47, "fiber core index");
  s["polish_angle_deg"] = num(41.2, "facet polish angle");
  s["taper_transmission"] = num(0.962, "taper factor in the budget");
  s["interface_transmission"] = num(0.964, "substrate interface factor in the budget");
}

const std::vector<double> calibrated_angles{9.4023,  9.8560,  10.3150, 10.7794, 11.2493, 11.7246, 12.2057,
                                            12.6924, 13.1849, 13.6834, 14.1878, 14.4088, 14.4900, 14.5720,
                                            14.6547, 14.7382, 14.8225, 14.9075, 14.9934, 15.0610};

Schema make_schema(StudyKind k) {
  Schema s;
  switch (k) {
    case StudyKind::grating:
      add_grating(s);
      s["budget_directionality"] = num(0.625, "D_GC");
      s["budget_overlap_x"] = num(0.977, "O_x");
      s["budget_overlap_y"] = num(0.983, "O_y");
      s["budget_taper"] = num(0.962, "taper transmission");
      s["budget_interface"] = num(0.964, "interface transmission");
      break;
    case StudyKind::fdtd:
      add_grating(s);
      add_fdtd(s);
      add_fiber(s);
      s["period_angle_deg"].default_value = calibrated_angles;
      s["wavelength_start"] = num(1480e-9, "sweep start, m");
      s["wavelength_stop"] = num(1600e-9, "sweep stop, m");
      s["wavelength_step"] = num(2.5e-9, "sweep step, m");
      s["write_fields"] = boolean(true, "write permittivity and design-wavelength field files");
      break;
    case StudyKind::align:
      add_grating(s);
      add_fdtd(s);
      add_fiber(s);
      s["period_angle_deg"].default_value = calibrated_angles;
      s["field_file"] = str("", {}, "binary field from an fdtd study; empty = run FDTD");
      s["directionality"] = num(0.0, "D_GC to use with field_file");
      s["dofs"] = strs({"x", "y", "z", "pitch", "yaw", "rotation"}, {"x", "y", "z", "pitch", "yaw", "rotation"},
                       "degrees of freedom to sweep");
      s["translation_range"] = num(15e-6, "half range of x/y sweeps, m");
      s["height_range"] = num(30e-6, "upper end of the z sweep, m");
      s["angle_range_deg"] = num(5.0, "half range of angular sweeps");
      s["steps"] = integer(61, "points per sweep");
      break;
    case StudyKind::spectrum:
      s["resonance_wavelength"] = num(1536e-9, "cavity resonance, m");
      s["quality_factor"] = num(6e4, "loaded Q");
      s["coupling_ratio"] = num(0.5, "kappa_in / kappa");
      s["noise"] = num(0.01, "relative Gaussian noise on the cavity spectrum");
      s["span_linewidths"] = num(20.0, "cavity scan span in linewidths");
      s["points"] = integer(801, "cavity scan points");
      s["gc_reflectivity"] = num(0.005, "grating back-reflection R_GC");
      s["path_length"] = num(185e-6, "grating-to-cavity path, m");
      s["group_index"] = num(4.0, "waveguide group index");
      s["coupling_efficiency"] = num(0.557, "fiber-to-waveguide eta");
      s["fringe_span"] = num(20e-9, "fringe scan span, m");
      s["fringe_points"] = integer(4001, "fringe scan points");
      break;
    case StudyKind::cpw:
      s["center_width"] = num(50e-6, "pin width, m");
      s["gap"] = num(5e-6, "pin-ground gap, m");
      s["ground_width"] = num(500e-6, "ground strip width, m");
      s["metal_thickness"] = num(1e-6, "m");
      s["standoff"] = num(125e-6, "ion height above the pin, m");
      s["impedance"] = num(50.0, "ohm");
      s["grounds"] = str("single_sided", {"single_sided", "symmetric"}, "ground return layout");
      s["distribution"] = str("uniform", {"uniform", "edge_weighted"}, "current distribution");
      s["filaments"] = integer(64, "filaments across each conductor");
      s["thickness_layers"] = integer(4, "filament layers through the metal");
      s["power"] = num(1.0, "MW power, W");
      s["profile_dz"] = nums({25e-6, 50e-6, 75e-6, 100e-6, 125e-6, 150e-6, 200e-6, 300e-6}, "standoffs, m");
      s["map_half_width"] = num(150e-6, "field map half width in x, m");
      s["map_points"] = integer(31, "field map points per axis");
      s["pulse_count"] = integer(128, "pi pulses per repetition");
      s["pi_duration"] = num(78e-9, "s");
      s["peak_power"] = num(17.8, "pulse peak power, W");
      s["repetition_period"] = num(36e-3, "s");
      s["heating_slope_mk_per_mw"] = num(3.6, "mixing-plate heating slope");
      s["stage_cooling_power"] = num(0.07, "mW/mK");
      break;
    case StudyKind::spin:
      s["experiments"] = strs({"rabi", "odmr", "cpmg", "readout", "tomography"},
                              {"rabi", "odmr", "cpmg", "readout", "tomography"}, "experiments to run");
      s["transition_frequency"] = num(1.76e9, "Hz");
      s["static_theta_deg"] = num(90.0, "static field polar angle");
      s["static_phi_deg"] = num(130.0, "static field azimuth");
      s["static_field"] = num(112.0, "static field magnitude, G");
      s["ac_field"] = num(3.0, "AC field at 1 W, G");
      s["ac_theta_deg"] = num(57.1, "AC field polar angle");
      s["ac_phi_deg"] = num(0.8, "AC field azimuth");
      s["pi_time"] = num(78e-9, "pi pulse duration fixing gamma, s");
      s["drive_power"] = num(17.8, "drive power, W");
      s["rabi_points"] = integer(201, "Rabi trace points");
      s["rabi_cycles"] = num(4.0, "Rabi trace length in periods");
      s["odmr_span"] = num(40e6, "ODMR detuning span, Hz");
      s["odmr_points"] = integer(201, "ODMR points");
      s["t1"] = num(0.0, "T1, s (0 = none)");
      s["t2"] = num(0.0, "T2, s (0 = none)");
      s["bath"] = str("power_law", {"power_law", "ornstein_uhlenbeck", "quasi_static"}, "CPMG noise bath");
      s["bath_sigma"] = num(6e5, "rms detuning, Hz");
      s["bath_correlation_time"] = num(10e-3, "OU correlation time, s");
      s["bath_exponent"] = num(0.0, "power-law s; 0 = solve from alpha_target");
      s["alpha_target"] = num(0.76, "decoupling exponent used to fix s");
      s["bath_low_cutoff"] = num(0.01, "Hz");
      s["bath_high_cutoff"] = num(1e7, "Hz");
      s["pulse_counts"] = ints({2, 4, 8, 16, 32, 64}, "CPMG pulse counts");
      s["trajectories"] = integer(2000, "noise trajectories");
      s["cpmg_points"] = integer(16, "evolution times per trace");
      s["t2_units"] = num(1e-3, "unit of the reported A, s");
      s["readout_cycles"] = integer(50, "excitation cycles per block");
      s["readout_photons"] = num(0.5, "photons per excitation on the bright transition");
      s["readout_efficiency"] = num(0.1, "detection efficiency");
      s["readout_dark_rate"] = num(20.0, "dark counts per second");
      s["readout_cycle_time"] = num(20e-6, "s per excitation cycle");
      s["readout_flip_probability"] = num(0.0, "spin flip per cycle");
      s["readout_shots"] = integer(10000, "independent readout windows");
      s["tomography_noise"] = num(0.02, "relative noise on synthetic Rabi rates");
      break;
  }
  return s;
}

void check_value(const std::string& path, const ParamSpec& spec, const json& v) {
  auto fail = [&](const std::string& what) { throw ValidationError(path + ": " + what); };
  auto check_choice = [&](const json& e) {
    const auto sv = e.get<std::string>();
    if (!spec.choices.empty() && std::find(spec.choices.begin(), spec.choices.end(), sv) == spec.choices.end())
      fail("invalid value '" + sv + "'; nearest valid value is '" + nearest_key(sv, spec.choices) + "'");
  };
  switch (spec.type) {
    case ParamType::number:
      if (!v.is_number()) fail("expected a number");
      break;
    case ParamType::integer:
      if (!v.is_number_integer()) fail("expected an integer");
      break;
    case ParamType::boolean:
      if (!v.is_boolean()) fail("expected true or false");
      break;
    case ParamType::string:
      if (!v.is_string()) fail("expected a string");
      check_choice(v);
      break;
    case ParamType::number_array:
    case ParamType::integer_array:
    case ParamType::string_array:
      if (!v.is_array()) fail("expected an array");
      for (const auto& e : v) {
        if (spec.type == ParamType::number_array && !e.is_number()) fail("expected an array of numbers");
        if (spec.type == ParamType::integer_array && !e.is_number_integer()) fail("expected an array of integers");
        if (spec.type == ParamType::string_array) {
          if (!e.is_string()) fail("expected an array of strings");
          check_choice(e);
        }
      }
      break;
  }
}

std::vector<std::string> keys_of(const Schema& s) {
  std::vector<std::string> k;
  for (const auto& [name, spec] : s) k.push_back(name);
  return k;
}

}  // namespace

const Schema& study_schema(StudyKind k) {
  static const std::map<StudyKind, Schema> all = [] {
    std::map<StudyKind, Schema> m;
    for (auto kind : {StudyKind::grating, StudyKind::fdtd, StudyKind::align, StudyKind::spectrum, StudyKind::cpw,
                      StudyKind::spin})
      m[kind] = make_schema(kind);
    return m;
  }();
  return all.at(k);
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t bd = static_cast<std::size_t>(-1);
  for (const auto& c : candidates) {
    const auto d = edit_distance(key, c);
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  return best;
}

StudyConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ValidationError("config: expected a JSON object");
  static const std::vector<std::string> top{"study", "seed", "output_directory", "parameters"};
  for (const auto& [key, value] : doc.items())
    if (std::find(top.begin(), top.end(), key) == top.end())
      throw ValidationError("config." + key + ": unknown key; nearest valid key is '" + nearest_key(key, top) + "'");
  if (!doc.contains("study") || !doc["study"].is_string()) throw ValidationError("config.study: required string");
  StudyConfig c;
  c.kind = parse_study_kind(doc["study"].get<std::string>());
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0))
      throw ValidationError("config.seed: expected a non-negative integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("output_directory")) {
    if (!doc["output_directory"].is_string()) throw ValidationError("config.output_directory: expected a string");
    c.output_directory = doc["output_directory"].get<std::string>();
  } else {
    c.output_directory = std::filesystem::path("out") / study_name(c.kind);
  }
  const auto& schema = study_schema(c.kind);
  c.parameters = json::object();
  for (const auto& [name, spec] : schema) c.parameters[name] = spec.default_value;
  if (doc.contains("parameters")) {
    if (!doc["parameters"].is_object()) throw ValidationError("config.parameters: expected an object");
    const auto names = keys_of(schema);
    for (const auto& [key, value] : doc["parameters"].items()) {
      const auto it = schema.find(key);
      if (it == schema.end())
        throw ValidationError("config.parameters." + key + ": unknown key for study '" + study_name(c.kind) +
                              "'; nearest valid key is '" + nearest_key(key, names) + "'");
      check_value("config.parameters." + key, it->second, value);
      c.parameters[key] = value;
    }
  }
  return c;
}

StudyConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

StudyConfig default_config(StudyKind k) { return parse_config(json{{"study", study_name(k)}}); }

json to_json(const StudyConfig& c) {
  return json{{"study", study_name(c.kind)},
              {"seed", c.seed},
              {"output_directory", c.output_directory.generic_string()},
              {"parameters", c.parameters}};
}

std::string canonical_text(const StudyConfig& c) { return to_json(c).dump(2) + "\n"; }

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("SHA-256 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string config_hash(const StudyConfig& c) { return sha256_hex(canonical_text(c)); }

std::string describe_schema(StudyKind k) {
  static const char* type_names[] = {"number", "integer", "bool", "string", "number[]", "integer[]", "string[]"};
  std::ostringstream os;
  os << "| key | type | default | notes |\n|---|---|---|---|\n";
  for (const auto& [name, spec] : study_schema(k)) {
    std::string def = spec.default_value.dump();
    if (def.size() > 40) def = def.substr(0, 37) + "...";
    os << "| `" << name << "` | " << type_names[static_cast<int>(spec.type)] << " | `" << def << "` | " << spec.help;
    if (!spec.choices.empty()) {
      os << " (";
      for (std::size_t i = 0; i < spec.choices.size(); ++i) os << (i ? ", " : "") << spec.choices[i];
      os << ")";
    }
    os << " |\n";
  }
  return os.str();
}

}  // namespace hprobe::cli
