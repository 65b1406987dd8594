#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "ilnet/scene/scenario.hpp"
#include "ilnet/scene/scenario_io.hpp"

namespace ilnet::scene {

struct GeneratorOptions {
  int history = 10;
  int future = 15;
  double sample_rate_hz = 10.0;
};

/// Pure function of (kind, seed, options). Agents follow lane-bound routes
/// made of straight and constant-curvature pieces under car-following and
/// yielding rules, with bounded lateral noise.
Scenario generate_scenario(ScenarioKind kind, std::uint64_t seed, const GeneratorOptions& options = {});

/// Checks the per-kind guarantees of generate_scenario: intersection scenes
/// contain two agents whose initial headings differ by at least 60 degrees,
/// intersection and merge scenes contain an agent pair within 5 m for at least
/// half of the steps, curve scenes turn the focal agent by at least 10 degrees.
bool kind_properties_hold(const Scenario& s);

struct DatasetSpec {
  int num_train = 2000;
  int num_val = 400;
  std::uint64_t seed = 0;
  std::map<std::string, double> kind_mix = {{"follow", 0.25}, {"intersection", 0.25}, {"merge", 0.25}, {"curve", 0.25}};
  GeneratorOptions options;
};

/// Scenario i of the dataset, independent of how many others are generated.
Scenario generate_dataset_item(const DatasetSpec& spec, int index);

/// Writes train/ and val/ scenario files plus manifest.json under `dir`.
SplitManifest generate_dataset(const std::filesystem::path& dir, const DatasetSpec& spec);

}  // namespace ilnet::scene
