#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ilnet/eval/evaluate.hpp"
#include "ilnet/model/config.hpp"
#include "ilnet/objective/trainer.hpp"
#include "ilnet/scene/generator.hpp"

namespace ilnet::cli {

/// Every setting of a run. Serialized as a flat JSON object; see
/// config_keys() for the accepted keys.
struct RunConfig {
  std::string data_dir = "data";
  std::string out_dir = "runs/default";
  scene::DatasetSpec dataset;
  model::ModelConfig model;
  objective::TrainOptions train;
  eval::EvalOptions eval;
  std::vector<std::string> ablation_rows;  ///< empty = every row of the standard grid
  std::vector<std::uint64_t> ablation_seeds{1, 2, 3};
  std::vector<double> mask_ratios{0.1, 0.2, 0.3};

  RunConfig();
  /// Throws ConfigError on inconsistent or out-of-range values.
  void validate() const;
};

const std::vector<std::string>& config_keys();

nlohmann::json config_to_json(const RunConfig& c);
/// Starts from the defaults and applies every key of `j`; unknown keys and
/// mistyped values throw ConfigError.
RunConfig config_from_json(const nlohmann::json& j);
/// Applies one key from a JSON value.
void set_config_value(RunConfig& c, const std::string& key, const nlohmann::json& value);
/// "key=value" where value is parsed as JSON, falling back to a plain string.
void apply_override(RunConfig& c, const std::string& assignment);

RunConfig load_config(const std::filesystem::path& path);
inline constexpr const char* kConfigEchoName = "config.json";
/// Writes the effective configuration as `dir/config.json`.
void echo_config(const std::filesystem::path& dir, const RunConfig& c);

}  // namespace ilnet::cli
