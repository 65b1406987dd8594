#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ilnet/eval/metrics.hpp"
#include "ilnet/model/ilnet_model.hpp"
#include "ilnet/objective/wta.hpp"

namespace ilnet::eval {

struct EvalOptions {
  objective::Task task = objective::Task::kJoint;
  double miss_threshold = kDefaultMissThreshold;
  double mask_ratio = 0.0;  ///< probability of hiding each history step but the last
  std::uint64_t mask_seed = 0;
  int workers = 1;  ///< scenarios evaluated concurrently; results do not depend on it
};

/// One agent's predictions from the last history step, in the global frame.
struct AgentPrediction {
  int agent_id = 0;
  bool focal = false;
  std::vector<std::vector<geo::Point>> proposals;  ///< K x F
  std::vector<std::vector<geo::Point>> finals;     ///< K x F
  std::vector<double> probs;                       ///< K
  std::vector<geo::Point> anchors;                 ///< K
  std::vector<double> anchor_index;                ///< K, fractional step index

  bool operator==(const AgentPrediction&) const = default;
};

struct ScenarioPrediction {
  std::string scenario_id;
  std::vector<AgentPrediction> agents;

  bool operator==(const ScenarioPrediction&) const = default;
};

struct ScenarioEval {
  std::string scenario_id;
  std::vector<int> focal_ids;
  std::vector<AccuracyMetrics> accuracy;    ///< per focal agent
  std::vector<DiversityMetrics> diversity;  ///< per focal agent
  JointMetrics joint;
  ScenarioPrediction prediction;
};

struct EvalResult {
  MetricReport report;
  std::vector<ScenarioEval> scenarios;
};

/// Hides history steps 0..H-2 independently with probability `ratio`.
scene::Scenario mask_history(const scene::Scenario& s, double ratio, std::uint64_t seed);

/// Predictions of every agent at the last history step.
ScenarioPrediction predict_scenario(const model::IlnetModel& model, const ParamStore& store,
                                    const scene::Scenario& s);

/// Scores the final trajectories of `prediction` against the future of `s`:
/// single-agent metrics for focal agents, joint metrics over all agents with
/// a labeled future. Throws DataError when the prediction does not match the
/// scenario.
ScenarioEval score_prediction(const scene::Scenario& s, ScenarioPrediction prediction, const EvalOptions& options);

/// Predicts (from the masked history when options.mask_ratio > 0) and scores.
ScenarioEval evaluate_scenario(const model::IlnetModel& model, const ParamStore& store, const scene::Scenario& s,
                               const EvalOptions& options, std::uint64_t mask_stream = 0);

/// Evaluates every scenario (scenario i uses mask stream i) and aggregates
/// in scenario order.
EvalResult evaluate_run(const model::IlnetModel& model, const ParamStore& store,
                        const std::vector<scene::Scenario>& scenarios, const EvalOptions& options);

/// minJointFDE for the joint task, minFDE for the marginal task.
double selection_metric(const MetricReport& report, objective::Task task);

nlohmann::json report_to_json(const MetricReport& r);
std::string report_to_text(const MetricReport& r);

nlohmann::json predictions_to_json(const std::vector<ScenarioPrediction>& predictions);
std::vector<ScenarioPrediction> predictions_from_json(const nlohmann::json& j);

inline constexpr const char* kReportFileName = "metrics.json";
inline constexpr const char* kReportTextName = "metrics.txt";
inline constexpr const char* kPredictionsFileName = "predictions.json";

/// Writes metrics.json, metrics.txt and predictions.json into `dir`.
void write_eval_outputs(const std::filesystem::path& dir, const EvalResult& result);

}  // namespace ilnet::eval
