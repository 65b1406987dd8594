#include "ilnet/cli/run_config.hpp"

#include <fstream>
#include <sstream>

#include "ilnet/errors.hpp"

namespace ilnet::cli {

using nlohmann::json;

RunConfig::RunConfig() {
  train.batch_size = 4;
  train.lr = 2e-3;
}

void RunConfig::validate() const {
  model.validate();
  if (dataset.options.history != model.history || dataset.options.future != model.future) {
    throw ConfigError("dataset and model horizons differ");
  }
  if (dataset.num_train < 1 || dataset.num_val < 1) throw ConfigError("num_train and num_val must be >= 1");
  if (!(dataset.options.sample_rate_hz > 0.0)) throw ConfigError("sample_rate_hz must be positive");
  double mix = 0.0;
  for (const auto& [kind, w] : dataset.kind_mix) {
    scene::kind_from_name(kind);
    if (w < 0.0) throw ConfigError("kind_mix weight of " + kind + " is negative");
    mix += w;
  }
  if (!(mix > 0.0)) throw ConfigError("kind_mix must have a positive weight");
  if (!(train.lr > 0.0)) throw ConfigError("lr must be positive");
  if (train.weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (train.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (train.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (train.workers < 1) throw ConfigError("workers must be >= 1");
  if (!(eval.miss_threshold > 0.0)) throw ConfigError("miss_threshold must be positive");
  if (eval.mask_ratio < 0.0 || eval.mask_ratio >= 1.0) throw ConfigError("mask_ratio must be in [0, 1)");
  for (double r : mask_ratios) {
    if (r < 0.0 || r >= 1.0) throw ConfigError("mask_ratios entries must be in [0, 1)");
  }
  if (ablation_seeds.empty()) throw ConfigError("ablation_seeds must not be empty");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "data_dir",      "out_dir",       "num_train",      "num_val",        "data_seed",      "kind_mix",
      "sample_rate_hz", "history",      "future",         "modes",          "dim",            "heads",
      "recurrences",   "map_radius",    "future_radius",  "history_radius", "agent_radius",   "refine_radius",
      "il_order",      "disable_fa",    "disable_ha",     "das_mode",       "das_strict_shapes", "huber_delta",
      "lr",            "weight_decay",  "epochs",         "batch_size",     "seed",           "task",
      "workers",       "miss_threshold", "mask_ratio",    "mask_seed",      "ablation_rows",  "ablation_seeds",
      "mask_ratios"};
  return keys;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["data_dir"] = c.data_dir;
  j["out_dir"] = c.out_dir;
  j["num_train"] = c.dataset.num_train;
  j["num_val"] = c.dataset.num_val;
  j["data_seed"] = c.dataset.seed;
  j["kind_mix"] = c.dataset.kind_mix;
  j["sample_rate_hz"] = c.dataset.options.sample_rate_hz;
  j["history"] = c.model.history;
  j["future"] = c.model.future;
  j["modes"] = c.model.modes;
  j["dim"] = c.model.dim;
  j["heads"] = c.model.heads;
  j["recurrences"] = c.model.recurrences;
  j["map_radius"] = c.model.map_radius;
  j["future_radius"] = c.model.future_radius;
  j["history_radius"] = c.model.history_radius;
  j["agent_radius"] = c.model.agent_radius;
  j["refine_radius"] = c.model.refine_radius;
  j["il_order"] = model::il_order_name(c.model.il_order);
  j["disable_fa"] = c.model.disable_fa;
  j["disable_ha"] = c.model.disable_ha;
  j["das_mode"] = model::anchor_mode_name(c.model.anchor_mode);
  j["das_strict_shapes"] = c.model.das_strict_shapes;
  j["huber_delta"] = c.model.huber_delta;
  j["lr"] = c.train.lr;
  j["weight_decay"] = c.train.weight_decay;
  j["epochs"] = c.train.epochs;
  j["batch_size"] = c.train.batch_size;
  j["seed"] = c.train.seed;
  j["task"] = objective::task_name(c.train.task);
  j["workers"] = c.train.workers;
  j["miss_threshold"] = c.eval.miss_threshold;
  j["mask_ratio"] = c.eval.mask_ratio;
  j["mask_seed"] = c.eval.mask_seed;
  j["ablation_rows"] = c.ablation_rows;
  j["ablation_seeds"] = c.ablation_seeds;
  j["mask_ratios"] = c.mask_ratios;
  return j;
}

void set_config_value(RunConfig& c, const std::string& key, const json& v) {
  try {
    if (key == "data_dir") c.data_dir = v.get<std::string>();
    else if (key == "out_dir") c.out_dir = v.get<std::string>();
    else if (key == "num_train") c.dataset.num_train = v.get<int>();
    else if (key == "num_val") c.dataset.num_val = v.get<int>();
    else if (key == "data_seed") c.dataset.seed = v.get<std::uint64_t>();
    else if (key == "kind_mix") c.dataset.kind_mix = v.get<std::map<std::string, double>>();
    else if (key == "sample_rate_hz") c.dataset.options.sample_rate_hz = v.get<double>();
    else if (key == "history") c.model.history = c.dataset.options.history = v.get<int>();
    else if (key == "future") c.model.future = c.dataset.options.future = v.get<int>();
    else if (key == "modes") c.model.modes = v.get<int>();
    else if (key == "dim") c.model.dim = v.get<int>();
    else if (key == "heads") c.model.heads = v.get<int>();
    else if (key == "recurrences") c.model.recurrences = v.get<int>();
    else if (key == "map_radius") c.model.map_radius = v.get<double>();
    else if (key == "future_radius") c.model.future_radius = v.get<double>();
    else if (key == "history_radius") c.model.history_radius = v.get<double>();
    else if (key == "agent_radius") c.model.agent_radius = v.get<double>();
    else if (key == "refine_radius") c.model.refine_radius = v.get<double>();
    else if (key == "il_order") c.model.il_order = model::il_order_from_name(v.get<std::string>());
    else if (key == "disable_fa") c.model.disable_fa = v.get<bool>();
    else if (key == "disable_ha") c.model.disable_ha = v.get<bool>();
    else if (key == "das_mode") c.model.anchor_mode = model::anchor_mode_from_name(v.get<std::string>());
    else if (key == "das_strict_shapes") c.model.das_strict_shapes = v.get<bool>();
    else if (key == "huber_delta") c.model.huber_delta = v.get<double>();
    else if (key == "lr") c.train.lr = v.get<double>();
    else if (key == "weight_decay") c.train.weight_decay = v.get<double>();
    else if (key == "epochs") c.train.epochs = v.get<int>();
    else if (key == "batch_size") c.train.batch_size = v.get<int>();
    else if (key == "seed") c.train.seed = v.get<std::uint64_t>();
    else if (key == "task") c.train.task = c.eval.task = objective::task_from_name(v.get<std::string>());
    else if (key == "workers") c.train.workers = c.eval.workers = v.get<int>();
    else if (key == "miss_threshold") c.eval.miss_threshold = v.get<double>();
    else if (key == "mask_ratio") c.eval.mask_ratio = v.get<double>();
    else if (key == "mask_seed") c.eval.mask_seed = v.get<std::uint64_t>();
    else if (key == "ablation_rows") c.ablation_rows = v.get<std::vector<std::string>>();
    else if (key == "ablation_seeds") c.ablation_seeds = v.get<std::vector<std::uint64_t>>();
    else if (key == "mask_ratios") c.mask_ratios = v.get<std::vector<double>>();
    else throw ConfigError("unknown config key '" + key + "'");
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + v.dump() + " (" + e.what() + ")");
  }
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) set_config_value(c, key, value);
  c.validate();
  return c;
}

void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  set_config_value(c, key, value);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path.string());
  const json j = json::parse(is, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config " + path.string() + " is not valid JSON");
  return config_from_json(j);
}

void echo_config(const std::filesystem::path& dir, const RunConfig& c) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / kConfigEchoName, std::ios::binary);
  if (!os) throw IoError("cannot write " + (dir / kConfigEchoName).string());
  os << config_to_json(c).dump(2) << '\n';
}

}  // namespace ilnet::cli
