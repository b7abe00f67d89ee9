#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace hprobe::cli {

enum class StudyKind { grating, fdtd, align, spectrum, cpw, spin };

StudyKind parse_study_kind(const std::string& name);
std::string study_name(StudyKind kind);

enum class ParamType { number, integer, boolean, string, number_array, integer_array, string_array };

struct ParamSpec {
  ParamType type = ParamType::number;
  nlohmann::json default_value;
  std::vector<std::string> choices;  // strings and string arrays only
  std::string help;
};

using Schema = std::map<std::string, ParamSpec>;

const Schema& study_schema(StudyKind kind);

struct StudyConfig {
  StudyKind kind = StudyKind::grating;
  nlohmann::json parameters;  // every schema key, defaults filled in
  std::filesystem::path output_directory = "out";  // parse_config defaults to out/<study>
  std::uint64_t seed = 1;
};

// Top level: {"study", "seed", "output_directory", "parameters"}. Unknown keys are
// rejected with the nearest valid key.
StudyConfig parse_config(const nlohmann::json& doc);
StudyConfig load_config(const std::filesystem::path& path);
StudyConfig default_config(StudyKind kind);

// Canonical form; keys sorted, defaults resolved.
nlohmann::json to_json(const StudyConfig& config);
std::string canonical_text(const StudyConfig& config);
std::string config_hash(const StudyConfig& config);  // SHA-256 hex of canonical_text

std::string sha256_hex(const std::string& data);

std::size_t edit_distance(const std::string& a, const std::string& b);
std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates);

// Markdown table of one schema, for the README.
std::string describe_schema(StudyKind kind);

}  // namespace hprobe::cli
