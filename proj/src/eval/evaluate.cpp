#include "ilnet/eval/evaluate.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ilnet/errors.hpp"
#include "ilnet/numerics/parallel.hpp"

namespace ilnet::eval {

scene::Scenario mask_history(const scene::Scenario& s, double ratio, std::uint64_t seed) {
  scene::Scenario out = s;
  if (ratio <= 0.0) return out;
  Rng rng(seed);
  for (auto& a : out.agents) {
    for (int t = 0; t + 1 < s.history; ++t) {
      if (rng.bernoulli(ratio)) a.states[static_cast<std::size_t>(t)].observed = false;
    }
  }
  return out;
}

ScenarioPrediction predict_scenario(const model::IlnetModel& model, const ParamStore& store,
                                    const scene::Scenario& s) {
  const model::SceneInputs in = model::build_scene_inputs(s, model.config());
  Tape tape;
  const model::ForwardResult out = model.forward(tape, store, in);
  const std::size_t K = in.modes, F = in.future, t = in.history - 1;
  const DenseArray& pro = out.proposals.value();
  const DenseArray& fin = out.refine.final.value();
  const DenseArray& logits = out.refine.logits.value();
  const DenseArray& anchor = out.refine.anchor.value();
  const DenseArray& frac = out.refine.frac.value();

  ScenarioPrediction pred;
  pred.scenario_id = s.id;
  for (std::size_t n = 0; n < in.agents; ++n) {
    const std::size_t node = in.node(n, t);
    const geo::Pose& frame = in.poses[node];
    AgentPrediction a;
    a.agent_id = s.agents[n].id;
    a.focal = std::find(s.focal_ids.begin(), s.focal_ids.end(), a.agent_id) != s.focal_ids.end();
    double mx = -INFINITY;
    for (std::size_t k = 0; k < K; ++k) mx = std::max(mx, logits[node * K + k]);
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(logits[node * K + k] - mx);
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<geo::Point> p, f;
      for (std::size_t i = 0; i < F; ++i) {
        const std::size_t at = ((node * K + k) * F + i) * 2;
        p.push_back(geo::to_global({pro[at], pro[at + 1]}, frame));
        f.push_back(geo::to_global({fin[at], fin[at + 1]}, frame));
      }
      a.proposals.push_back(std::move(p));
      a.finals.push_back(std::move(f));
      a.probs.push_back(std::exp(logits[node * K + k] - mx) / z);
      a.anchors.push_back(geo::to_global({anchor[(node * K + k) * 2], anchor[(node * K + k) * 2 + 1]}, frame));
      a.anchor_index.push_back(frac[node * K + k]);
    }
    pred.agents.push_back(std::move(a));
  }
  return pred;
}

ScenarioEval score_prediction(const scene::Scenario& s, ScenarioPrediction prediction, const EvalOptions& options) {
  const std::size_t N = s.agents.size();
  const std::size_t H = static_cast<std::size_t>(s.history), F = static_cast<std::size_t>(s.future);
  if (prediction.scenario_id != s.id || prediction.agents.size() != N) {
    throw DataError("prediction '" + prediction.scenario_id + "' does not match scenario '" + s.id + "'");
  }
  const std::size_t K = prediction.agents.front().finals.size();
  for (std::size_t n = 0; n < N; ++n) {
    const AgentPrediction& a = prediction.agents[n];
    bool ok = a.agent_id == s.agents[n].id && a.finals.size() == K && a.probs.size() == K;
    for (const auto& mode : a.finals) ok = ok && mode.size() == F;
    if (!ok) throw DataError("prediction for agent " + std::to_string(a.agent_id) + " of '" + s.id + "' is malformed");
  }
  ScenarioEval ev;
  ev.scenario_id = s.id;
  ev.focal_ids = s.focal_ids;
  ev.prediction = std::move(prediction);

  // Scores are computed in each agent's frame at the last history step so
  // they do not depend on the global placement of the scene.
  DenseArray preds({N, K, F, 2}), gt({N, F, 2});
  std::vector<double> valid(N * F, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    const auto& last = s.agents[n].states[H - 1];
    const geo::Pose frame{last.position, last.heading};
    const AgentPrediction& a = ev.prediction.agents[n];
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t f = 0; f < F; ++f) {
        const geo::Point p = geo::to_local(a.finals[k][f], frame);
        preds[((n * K + k) * F + f) * 2] = p.x;
        preds[((n * K + k) * F + f) * 2 + 1] = p.y;
      }
    }
    for (std::size_t f = 0; f < F; ++f) {
      const auto& st = s.agents[n].states[H + f];
      if (!st.observed) continue;
      const geo::Point g = geo::to_local(st.position, frame);
      gt[(n * F + f) * 2] = g.x;
      gt[(n * F + f) * 2 + 1] = g.y;
      valid[n * F + f] = 1.0;
    }
  }
  ev.joint = joint_metrics(preds, gt, valid);

  const Box crop = scenario_crop(s);
  const DrivableRaster raster(s.map, extend_with_map(crop, s.map));
  for (int id : s.focal_ids) {
    const std::size_t n = *s.agent_index(id);
    DenseArray p({K, F, 2}), g({F, 2});
    std::copy_n(preds.ptr() + n * K * F * 2, K * F * 2, p.ptr());
    std::copy_n(gt.ptr() + n * F * 2, F * 2, g.ptr());
    const std::vector<double> v(valid.begin() + static_cast<std::ptrdiff_t>(n * F),
                                valid.begin() + static_cast<std::ptrdiff_t>((n + 1) * F));
    ev.accuracy.push_back(accuracy_metrics(p, ev.prediction.agents[n].probs, g, v, options.miss_threshold));
    ev.diversity.push_back(diversity_metrics(ev.prediction.agents[n].finals, raster, crop));
  }
  return ev;
}

ScenarioEval evaluate_scenario(const model::IlnetModel& model, const ParamStore& store, const scene::Scenario& s,
                               const EvalOptions& options, std::uint64_t mask_stream) {
  const scene::Scenario input =
      options.mask_ratio > 0.0 ? mask_history(s, options.mask_ratio, derive_seed(options.mask_seed, mask_stream)) : s;
  return score_prediction(s, predict_scenario(model, store, input), options);
}

EvalResult evaluate_run(const model::IlnetModel& model, const ParamStore& store,
                        const std::vector<scene::Scenario>& scenarios, const EvalOptions& options) {
  if (scenarios.empty()) throw DataError("evaluation set is empty");
  EvalResult result;
  MetricAccumulator acc;
  std::vector<ScenarioEval> evals(scenarios.size());
  parallel_for(scenarios.size(), static_cast<std::size_t>(std::max(1, options.workers)),
               [&](std::size_t i) { evals[i] = evaluate_scenario(model, store, scenarios[i], options, i); });
  for (auto& ev : evals) {
    for (std::size_t j = 0; j < ev.accuracy.size(); ++j) acc.add_agent(ev.accuracy[j], ev.diversity[j]);
    acc.add_scenario(ev.joint);
    result.scenarios.push_back(std::move(ev));
  }
  result.report = acc.report();
  return result;
}

double selection_metric(const MetricReport& report, objective::Task task) {
  return task == objective::Task::kJoint ? report.min_joint_fde : report.min_fde;
}

nlohmann::json report_to_json(const MetricReport& r) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& name : metric_names()) j[name] = metric_value(r, name);
  j["agents"] = r.agents;
  j["scenarios"] = r.scenarios;
  j["aae_agents"] = r.aae_agents;
  return j;
}

std::string report_to_text(const MetricReport& r) {
  std::ostringstream os;
  char buf[96];
  for (const auto& name : metric_names()) {
    std::snprintf(buf, sizeof(buf), "%-14s %.6f\n", name.c_str(), metric_value(r, name));
    os << buf;
  }
  os << "agents         " << r.agents << "\nscenarios      " << r.scenarios << '\n';
  return os.str();
}

namespace {

nlohmann::json points_json(const std::vector<geo::Point>& pts) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& p : pts) a.push_back({p.x, p.y});
  return a;
}

std::vector<geo::Point> points_from(const nlohmann::json& j) {
  std::vector<geo::Point> pts;
  for (const auto& p : j) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return pts;
}

}  // namespace

nlohmann::json predictions_to_json(const std::vector<ScenarioPrediction>& predictions) {
  nlohmann::json root;
  root["format"] = "ilnet-predictions";
  root["version"] = 1;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& sp : predictions) {
    nlohmann::json s;
    s["id"] = sp.scenario_id;
    nlohmann::json agents = nlohmann::json::array();
    for (const auto& a : sp.agents) {
      nlohmann::json aj;
      aj["id"] = a.agent_id;
      aj["focal"] = a.focal;
      aj["probs"] = a.probs;
      aj["anchor_index"] = a.anchor_index;
      aj["anchors"] = points_json(a.anchors);
      nlohmann::json pro = nlohmann::json::array(), fin = nlohmann::json::array();
      for (const auto& m : a.proposals) pro.push_back(points_json(m));
      for (const auto& m : a.finals) fin.push_back(points_json(m));
      aj["proposals"] = std::move(pro);
      aj["finals"] = std::move(fin);
      agents.push_back(std::move(aj));
    }
    s["agents"] = std::move(agents);
    list.push_back(std::move(s));
  }
  root["scenarios"] = std::move(list);
  return root;
}

std::vector<ScenarioPrediction> predictions_from_json(const nlohmann::json& root) {
  try {
    if (root.at("format") != "ilnet-predictions") throw ParseError("not a predictions file");
    if (root.at("version") != 1) throw VersionError("unsupported predictions version");
    std::vector<ScenarioPrediction> out;
    for (const auto& s : root.at("scenarios")) {
      ScenarioPrediction sp;
      sp.scenario_id = s.at("id").get<std::string>();
      for (const auto& aj : s.at("agents")) {
        AgentPrediction a;
        a.agent_id = aj.at("id").get<int>();
        a.focal = aj.at("focal").get<bool>();
        a.probs = aj.at("probs").get<std::vector<double>>();
        a.anchor_index = aj.at("anchor_index").get<std::vector<double>>();
        a.anchors = points_from(aj.at("anchors"));
        for (const auto& m : aj.at("proposals")) a.proposals.push_back(points_from(m));
        for (const auto& m : aj.at("finals")) a.finals.push_back(points_from(m));
        sp.agents.push_back(std::move(a));
      }
      out.push_back(std::move(sp));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed predictions file: ") + e.what());
  }
}

void write_eval_outputs(const std::filesystem::path& dir, const EvalResult& result) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw IoError("cannot write " + (dir / name).string());
    os << text;
  };
  write(kReportFileName, report_to_json(result.report).dump(2) + "\n");
  write(kReportTextName, report_to_text(result.report));
  std::vector<ScenarioPrediction> preds;
  for (const auto& s : result.scenarios) preds.push_back(s.prediction);
  write(kPredictionsFileName, predictions_to_json(preds).dump(0) + "\n");
}

}  // namespace ilnet::eval
