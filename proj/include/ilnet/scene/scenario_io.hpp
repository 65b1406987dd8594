#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ilnet/scene/scenario.hpp"

namespace ilnet::scene {

inline constexpr const char* kScenarioFormat = "ilnet-scenario";
inline constexpr int kScenarioVersion = 1;

/// Serializes to the documented JSON schema. Doubles use the shortest
/// representation that parses back to the identical bit pattern.
std::string scenario_to_text(const Scenario& s);
/// Throws ParseError (with line or field path) or VersionError.
Scenario scenario_from_text(const std::string& text);

void save_scenario(const std::filesystem::path& path, const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path);

struct SplitManifest {
  std::uint64_t seed = 0;
  std::map<std::string, double> kind_mix;  ///< kind name -> fraction
  std::vector<std::string> train;          ///< paths relative to the manifest directory
  std::vector<std::string> val;

  bool operator==(const SplitManifest&) const = default;
};

inline constexpr const char* kManifestFileName = "manifest.json";

/// Throws DataError when train and val share an entry.
void save_manifest(const std::filesystem::path& path, const SplitManifest& m);
SplitManifest load_manifest(const std::filesystem::path& path);

/// Loads every scenario listed in the split ("train" or "val").
std::vector<Scenario> load_split(const std::filesystem::path& manifest_path, const std::string& split);

}  // namespace ilnet::scene
