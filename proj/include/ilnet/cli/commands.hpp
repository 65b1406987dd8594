#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "ilnet/cli/run_config.hpp"

namespace ilnet::cli {

/// Writes the dataset described by `c` into c.data_dir, plus a config echo.
scene::SplitManifest cmd_generate(const RunConfig& c, std::ostream& log);

struct TrainOutcome {
  objective::FitResult fit;
  eval::MetricReport val_report;  ///< best checkpoint on the validation split
  double cpu_seconds = 0.0;       ///< process CPU time of the training loop
};

/// Written next to the checkpoints: {"cpu_seconds": ...}.
inline constexpr const char* kTimingFileName = "timing.json";

/// Trains on c.data_dir and writes the run into c.out_dir: config echo,
/// best/ and last/ checkpoints, loss_log.txt and eval/ for the best epoch.
TrainOutcome cmd_train(const RunConfig& c, bool resume, std::ostream& log);

/// Evaluates a checkpoint on a split of c.data_dir and writes the reports to
/// `out`. Uses c.eval (task, miss threshold, mask ratio and seed).
eval::EvalResult cmd_eval(const RunConfig& c, const std::filesystem::path& checkpoint, const std::string& split,
                          const std::filesystem::path& out, std::ostream& log);

struct AblationRow {
  std::string name;
  std::string label;
  nlohmann::json delta;  ///< config keys applied on top of the base config
};

/// TA only, TA+FA, TA+HA, forward IL, inverse IL with midpoint anchors and
/// the full model (inverse IL with dynamic anchors).
const std::vector<AblationRow>& standard_grid();

struct RowResult {
  std::string name;
  std::string label;
  bool ok = true;
  std::string error;
  std::vector<std::uint64_t> seeds;
  std::vector<eval::MetricReport> reports;  ///< per seed, validation split
  std::vector<double> cpu_seconds;          ///< per seed, training loop
  double joint_ade_mean = 0.0, joint_ade_spread = 0.0;
  double joint_fde_mean = 0.0, joint_fde_spread = 0.0;
};

struct MaskResult {
  std::string row;
  double ratio = 0.0;
  std::vector<double> clean_min_fde;   ///< per seed
  std::vector<double> masked_min_fde;  ///< per seed
  double degradation = 0.0;            ///< seed mean of masked / clean - 1
};

struct AblationResult {
  std::vector<RowResult> rows;
  std::vector<MaskResult> masks;

  const RowResult* row(const std::string& name) const;
  const MaskResult* mask(const std::string& row, double ratio) const;
};

/// Trains every selected row for every seed under c.out_dir/<row>/seed<s>,
/// then re-evaluates every trained row at each of c.mask_ratios.
/// Runs whose directory already holds a finished run with the same effective
/// config are reused. Failed rows are reported and the sweep continues.
/// Writes ablation.json and ablation.md into c.out_dir.
AblationResult cmd_ablate(const RunConfig& c, std::ostream& log);

std::string ablation_markdown(const AblationResult& r);
nlohmann::json ablation_json(const AblationResult& r);

/// Renders the prediction for the scenario in `scenario_path` found in
/// `predictions_path` into an SVG file.
void cmd_plot(const std::filesystem::path& scenario_path, const std::filesystem::path& predictions_path,
              const std::filesystem::path& out);

}  // namespace ilnet::cli
