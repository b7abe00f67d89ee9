#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "hprobe/cli/config.hpp"
#include "hprobe/cli/reproduce.hpp"
#include "hprobe/cli/studies.hpp"
#include "hprobe/core/error.hpp"

namespace {

constexpr int exit_ok = 0, exit_validation = 2, exit_numerical = 3, exit_acceptance = 4;

int exit_code(const hprobe::Error& e) {
  return e.kind() == hprobe::ErrorKind::numerical ? exit_numerical : exit_validation;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace hprobe::cli;
  CLI::App app{"Hybrid fiber/microwave probe design and simulation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  int parallel = 1;
  app.add_option("--config", config_path, "study configuration (JSON)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "RNG seed (u64)");
  app.add_option("--parallel", parallel, "worker threads")->check(CLI::PositiveNumber);

  const std::vector<std::pair<std::string, std::string>> studies{
      {"grating", "apodized grating schedule and efficiency budget"},
      {"fdtd", "2D FDTD grating run and wavelength sweep"},
      {"align", "fiber alignment tolerance sweeps"},
      {"spectrum", "cavity reflection fit and Fabry-Perot fringes"},
      {"cpw", "coplanar waveguide field and heating chain"},
      {"spin", "Rabi, ODMR, CPMG, readout and tomography"}};
  for (const auto& [name, help] : studies) app.add_subcommand(name, help);
  auto* repro = app.add_subcommand("reproduce", "run every bundled study and compare with reference values");
  auto* schema = app.add_subcommand("schema", "print the parameter schema of a study");
  std::string schema_study = "grating";
  schema->add_option("study", schema_study, "study name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_validation;
  }

  try {
    RunOptions ro;
    ro.parallel = parallel;
    if (schema->parsed()) {
      std::cout << describe_schema(parse_study_kind(schema_study));
      return exit_ok;
    }
    if (repro->parsed()) {
      const auto res = reproduce_figures(out_dir.empty() ? "out/reproduce" : out_dir, seed.value_or(1), ro);
      std::cout << format_summary(res.rows);
      if (!res.all_pass()) {
        std::cerr << "failing criteria:";
        for (const auto& r : res.rows)
          if (!r.pass) std::cerr << " " << r.tag << "/" << r.quantity;
        std::cerr << "\n";
        return exit_acceptance;
      }
      return exit_ok;
    }
    for (auto* sub : app.get_subcommands()) {
      const auto kind = parse_study_kind(sub->get_name());
      StudyConfig cfg = config_path.empty() ? default_config(kind) : load_config(config_path);
      if (cfg.kind != kind)
        throw hprobe::ValidationError("config.study: '" + study_name(cfg.kind) + "' does not match subcommand '" +
                                      sub->get_name() + "'");
      if (!out_dir.empty()) cfg.output_directory = out_dir;
      if (seed) cfg.seed = *seed;
      const auto m = run_study(cfg, ro);
      std::cout << m.study << ": " << m.outputs.size() << " outputs in " << cfg.output_directory.string() << " ("
                << m.wall_clock_seconds << " s)\n"
                << m.results.dump(2) << "\n";
    }
    return exit_ok;
  } catch (const hprobe::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  }
}
