#include "ilnet/cli/commands.hpp"

#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "ilnet/cli/svg_plot.hpp"
#include "ilnet/errors.hpp"
#include "ilnet/scene/scenario_io.hpp"

namespace ilnet::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path manifest_path(const RunConfig& c) { return fs::path(c.data_dir) / scene::kManifestFileName; }

std::vector<scene::Scenario> load(const RunConfig& c, const std::string& split) {
  const fs::path m = manifest_path(c);
  if (!fs::exists(m)) throw DataError("no dataset manifest at " + m.string());
  return scene::load_split(m, split);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  json j = json::parse(is, nullptr, false);
  if (j.is_discarded()) throw ParseError(path.string() + " is not valid JSON");
  return j;
}

eval::MetricReport report_from_json(const json& j) {
  eval::MetricReport r;
  r.min_ade = j.at("min_ade");
  r.min_fde = j.at("min_fde");
  r.mr = j.at("mr");
  r.brier_min_fde = j.at("brier_min_fde");
  r.min_joint_ade = j.at("min_joint_ade");
  r.min_joint_fde = j.at("min_joint_fde");
  r.rf = j.at("rf");
  r.dao = j.at("dao");
  r.dac = j.at("dac");
  r.aae = j.at("aae");
  r.agents = j.at("agents");
  r.scenarios = j.at("scenarios");
  r.aae_agents = j.at("aae_agents");
  return r;
}

std::pair<double, double> mean_spread(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0};
}

std::string fmt(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

TrainOutcome train_loaded(const RunConfig& c, const std::vector<scene::Scenario>& train,
                          const std::vector<scene::Scenario>& val, bool resume, std::ostream& log) {
  c.validate();
  const fs::path out(c.out_dir);
  echo_config(out, c);
  ParamStore store;
  const model::IlnetModel model = model::IlnetModel::create(c.model, c.train.seed, store);
  eval::EvalOptions clean = c.eval;
  clean.mask_ratio = 0.0;
  clean.task = c.train.task;
  const objective::Validator validate = [&](const ParamStore& s) {
    return eval::selection_metric(eval::evaluate_run(model, s, val, clean).report, c.train.task);
  };
  TrainOutcome outcome;
  const std::clock_t start = std::clock();
  outcome.fit = objective::fit(model, store, train, validate, c.train, out, resume, &log);
  outcome.cpu_seconds = static_cast<double>(std::clock() - start) / CLOCKS_PER_SEC;
  write_text(out / kTimingFileName, json{{"cpu_seconds", outcome.cpu_seconds}}.dump() + "\n");
  ParamStore best;
  model::IlnetModel::create(c.model, c.train.seed, best);
  objective::load_model_checkpoint(out / "best", c.model, best);
  const eval::EvalResult result = eval::evaluate_run(model, best, val, clean);
  eval::write_eval_outputs(out / "eval", result);
  outcome.val_report = result.report;
  return outcome;
}

}  // namespace

scene::SplitManifest cmd_generate(const RunConfig& c, std::ostream& log) {
  c.validate();
  const scene::SplitManifest m = scene::generate_dataset(c.data_dir, c.dataset);
  echo_config(c.data_dir, c);
  log << "wrote " << m.train.size() << " train and " << m.val.size() << " val scenarios to " << c.data_dir << '\n';
  return m;
}

TrainOutcome cmd_train(const RunConfig& c, bool resume, std::ostream& log) {
  c.validate();
  const auto train = load(c, "train");
  const auto val = load(c, "val");
  TrainOutcome outcome = train_loaded(c, train, val, resume, log);
  log << "best epoch " << outcome.fit.best_epoch << " " << (c.train.task == objective::Task::kJoint ? "minJointFDE " : "minFDE ")
      << fmt(outcome.fit.best_metric) << '\n';
  return outcome;
}

eval::EvalResult cmd_eval(const RunConfig& c, const fs::path& checkpoint, const std::string& split, const fs::path& out,
                          std::ostream& log) {
  c.validate();
  const auto data = load(c, split);
  ParamStore store;
  const model::IlnetModel model = model::IlnetModel::create(c.model, c.train.seed, store);
  objective::load_model_checkpoint(checkpoint, c.model, store);
  const eval::EvalResult result = eval::evaluate_run(model, store, data, c.eval);
  eval::write_eval_outputs(out, result);
  echo_config(out, c);
  log << eval::report_to_text(result.report);
  return result;
}

const std::vector<AblationRow>& standard_grid() {
  static const std::vector<AblationRow> rows{
      {"ta_only", "TA only", {{"disable_fa", true}, {"disable_ha", true}, {"das_mode", "midpoint"}}},
      {"ta_fa", "TA + FA", {{"disable_fa", false}, {"disable_ha", true}, {"das_mode", "midpoint"}}},
      {"ta_ha", "TA + HA", {{"disable_fa", true}, {"disable_ha", false}, {"das_mode", "midpoint"}}},
      {"forward", "TA + FA + HA, forward order",
       {{"disable_fa", false}, {"disable_ha", false}, {"il_order", "forward"}, {"das_mode", "midpoint"}}},
      {"inverse", "inverse IL",
       {{"disable_fa", false}, {"disable_ha", false}, {"il_order", "inverse"}, {"das_mode", "midpoint"}}},
      {"full", "inverse IL + DAS",
       {{"disable_fa", false}, {"disable_ha", false}, {"il_order", "inverse"}, {"das_mode", "dynamic"}}},
  };
  return rows;
}

const RowResult* AblationResult::row(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const MaskResult* AblationResult::mask(const std::string& row, double ratio) const {
  for (const auto& m : masks) {
    if (m.row == row && m.ratio == ratio) return &m;
  }
  return nullptr;
}

AblationResult cmd_ablate(const RunConfig& base, std::ostream& log) {
  base.validate();
  std::vector<AblationRow> rows;
  for (const auto& r : standard_grid()) {
    if (base.ablation_rows.empty() ||
        std::find(base.ablation_rows.begin(), base.ablation_rows.end(), r.name) != base.ablation_rows.end()) {
      rows.push_back(r);
    }
  }
  for (const auto& name : base.ablation_rows) {
    if (std::none_of(rows.begin(), rows.end(), [&](const AblationRow& r) { return r.name == name; })) {
      throw ConfigError("unknown ablation row '" + name + "'");
    }
  }
  const auto train = load(base, "train");
  const auto val = load(base, "val");
  const fs::path root(base.out_dir);
  fs::create_directories(root);

  AblationResult result;
  for (const auto& row : rows) {
    RowResult rr;
    rr.name = row.name;
    rr.label = row.label;
    for (std::uint64_t seed : base.ablation_seeds) {
      RunConfig c = base;
      for (const auto& [k, v] : row.delta.items()) set_config_value(c, k, v);
      c.train.seed = seed;
      c.out_dir = (root / row.name / ("seed" + std::to_string(seed))).string();
      const fs::path dir(c.out_dir);
      try {
        const fs::path done = dir / "eval" / eval::kReportFileName;
        if (fs::exists(done) && fs::exists(dir / kConfigEchoName) &&
            read_json(dir / kConfigEchoName) == config_to_json(c)) {
          log << row.name << " seed " << seed << ": reusing finished run\n";
          rr.reports.push_back(report_from_json(read_json(done)));
          const fs::path timing = dir / kTimingFileName;
          rr.cpu_seconds.push_back(fs::exists(timing) ? read_json(timing).at("cpu_seconds").get<double>() : 0.0);
        } else {
          log << row.name << " seed " << seed << ": training\n";
          std::ostringstream quiet;
          const TrainOutcome t = train_loaded(c, train, val, false, quiet);
          rr.reports.push_back(t.val_report);
          rr.cpu_seconds.push_back(t.cpu_seconds);
        }
        rr.seeds.push_back(seed);
        log << "  minJointFDE " << fmt(rr.reports.back().min_joint_fde) << " minJointADE "
            << fmt(rr.reports.back().min_joint_ade) << " (" << fmt(rr.cpu_seconds.back(), 1) << " s)\n";
      } catch (const std::exception& e) {
        rr.ok = false;
        rr.error = e.what();
        log << row.name << " seed " << seed << " failed: " << e.what() << '\n';
        break;
      }
    }
    std::vector<double> ade, fde;
    for (const auto& r : rr.reports) {
      ade.push_back(r.min_joint_ade);
      fde.push_back(r.min_joint_fde);
    }
    std::tie(rr.joint_ade_mean, rr.joint_ade_spread) = mean_spread(ade);
    std::tie(rr.joint_fde_mean, rr.joint_fde_spread) = mean_spread(fde);
    result.rows.push_back(std::move(rr));
  }

  // History-masking robustness of every trained row.
  for (const auto& row : rows) {
    const RowResult* rr = result.row(row.name);
    if (!rr || !rr->ok) continue;
    for (double ratio : base.mask_ratios) {
      MaskResult mr;
      mr.row = row.name;
      mr.ratio = ratio;
      double degradation = 0.0;
      for (std::size_t i = 0; i < rr->seeds.size(); ++i) {
        RunConfig c = base;
        for (const auto& [k, v] : row.delta.items()) set_config_value(c, k, v);
        c.train.seed = rr->seeds[i];
        const fs::path dir = root / row.name / ("seed" + std::to_string(rr->seeds[i]));
        const fs::path mask_dir = dir / ("eval_mask" + fmt(ratio, 2));
        eval::MetricReport masked;
        if (fs::exists(mask_dir / eval::kReportFileName) && fs::exists(mask_dir / kConfigEchoName) &&
            read_json(mask_dir / kConfigEchoName) == config_to_json(c)) {
          masked = report_from_json(read_json(mask_dir / eval::kReportFileName));
        } else {
          ParamStore store;
          const model::IlnetModel model = model::IlnetModel::create(c.model, c.train.seed, store);
          objective::load_model_checkpoint(dir / "best", c.model, store);
          eval::EvalOptions opts = c.eval;
          opts.mask_ratio = ratio;
          const eval::EvalResult run = eval::evaluate_run(model, store, val, opts);
          eval::write_eval_outputs(mask_dir, run);
          masked = run.report;
          echo_config(mask_dir, c);
        }
        mr.clean_min_fde.push_back(rr->reports[i].min_fde);
        mr.masked_min_fde.push_back(masked.min_fde);
        degradation += masked.min_fde / rr->reports[i].min_fde - 1.0;
      }
      mr.degradation = degradation / static_cast<double>(rr->seeds.size());
      log << "mask " << fmt(ratio, 2) << " " << row.name << ": minFDE degradation " << fmt(100.0 * mr.degradation, 2)
          << "%\n";
      result.masks.push_back(std::move(mr));
    }
  }
  write_text(root / "ablation.json", ablation_json(result).dump(2) + "\n");
  write_text(root / "ablation.md", ablation_markdown(result));
  echo_config(root, base);
  return result;
}

std::string ablation_markdown(const AblationResult& r) {
  std::ostringstream os;
  os << "| row | seeds | minJointADE | minJointFDE | minADE | minFDE |\n|---|---|---|---|---|---|\n";
  for (const auto& row : r.rows) {
    if (!row.ok) {
      os << "| " << row.label << " | failed: " << row.error << " | | | | |\n";
      continue;
    }
    std::vector<double> ade, fde;
    for (const auto& rep : row.reports) {
      ade.push_back(rep.min_ade);
      fde.push_back(rep.min_fde);
    }
    const auto [ma, sa] = mean_spread(ade);
    const auto [mf, sf] = mean_spread(fde);
    os << "| " << row.label << " | " << row.seeds.size() << " | " << fmt(row.joint_ade_mean) << " ± "
       << fmt(row.joint_ade_spread) << " | " << fmt(row.joint_fde_mean) << " ± " << fmt(row.joint_fde_spread) << " | "
       << fmt(ma) << " ± " << fmt(sa) << " | " << fmt(mf) << " ± " << fmt(sf) << " |\n";
  }
  if (!r.masks.empty()) {
    os << "\n| history mask | row | clean minFDE | masked minFDE | degradation |\n|---|---|---|---|---|\n";
    for (const auto& m : r.masks) {
      const auto [mc, sc] = mean_spread(m.clean_min_fde);
      const auto [mm, sm] = mean_spread(m.masked_min_fde);
      os << "| " << fmt(100.0 * m.ratio, 0) << "% | " << m.row << " | " << fmt(mc) << " | " << fmt(mm) << " | "
         << fmt(100.0 * m.degradation, 2) << "% |\n";
    }
  }
  return os.str();
}

json ablation_json(const AblationResult& r) {
  json j;
  j["rows"] = json::array();
  for (const auto& row : r.rows) {
    json rj;
    rj["name"] = row.name;
    rj["label"] = row.label;
    rj["ok"] = row.ok;
    if (!row.ok) rj["error"] = row.error;
    rj["seeds"] = row.seeds;
    rj["cpu_seconds"] = row.cpu_seconds;
    rj["min_joint_ade_mean"] = row.joint_ade_mean;
    rj["min_joint_ade_spread"] = row.joint_ade_spread;
    rj["min_joint_fde_mean"] = row.joint_fde_mean;
    rj["min_joint_fde_spread"] = row.joint_fde_spread;
    rj["reports"] = json::array();
    for (const auto& rep : row.reports) rj["reports"].push_back(eval::report_to_json(rep));
    j["rows"].push_back(std::move(rj));
  }
  j["masks"] = json::array();
  for (const auto& m : r.masks) {
    j["masks"].push_back({{"row", m.row},
                          {"ratio", m.ratio},
                          {"clean_min_fde", m.clean_min_fde},
                          {"masked_min_fde", m.masked_min_fde},
                          {"degradation", m.degradation}});
  }
  return j;
}

void cmd_plot(const fs::path& scenario_path, const fs::path& predictions_path, const fs::path& out) {
  const scene::Scenario s = scene::load_scenario(scenario_path);
  const auto preds = eval::predictions_from_json(read_json(predictions_path));
  for (const auto& p : preds) {
    if (p.scenario_id == s.id) {
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      write_text(out, render_svg(s, p));
      return;
    }
  }
  throw DataError("predictions file " + predictions_path.string() + " has no entry for scenario '" + s.id + "'");
}

}  // namespace ilnet::cli
