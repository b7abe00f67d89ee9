#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hprobe/cli/studies.hpp"

namespace hprobe::cli {

struct SummaryRow {
  std::string tag;       // figure tag, e.g. fig2c
  std::string quantity;  // e.g. eta_sim
  double computed = 0.0;
  double target = 0.0;
  std::string tolerance;
  bool pass = false;
};

struct ReproduceResult {
  std::vector<SummaryRow> rows;
  std::vector<RunManifest> runs;
  bool all_pass() const;
};

// Runs the bundled study configurations under `out_dir` (one subdirectory per figure
// tag) and compares headline numbers with their reference values.
ReproduceResult reproduce_figures(const std::filesystem::path& out_dir, std::uint64_t seed,
                                  const RunOptions& options = {});

std::string format_summary(const std::vector<SummaryRow>& rows);
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);

}  // namespace hprobe::cli
