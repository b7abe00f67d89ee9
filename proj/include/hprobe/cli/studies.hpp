#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hprobe/cli/config.hpp"

namespace hprobe::cli {

inline constexpr const char* toolkit_version = "0.3.0";

struct RunOptions {
  int parallel = 1;  // OpenMP threads for sweeps and kernels
};

struct RunManifest {
  std::string study;
  std::string config_hash;
  std::string toolkit_version;
  std::string started_utc, finished_utc;
  double wall_clock_seconds = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;  // relative to the output directory
  bool complete = false;
  std::string error;
  nlohmann::json results;  // headline numbers, also written to results.json
};

// Writes config.json, the study outputs, results.json and finally manifest.json. A failure
// leaves completed outputs in place, writes an incomplete manifest and rethrows.
RunManifest run_study(const StudyConfig& config, const RunOptions& options = {});

nlohmann::json manifest_json(const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace hprobe::cli
