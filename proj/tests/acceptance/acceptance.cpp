// Acceptance gate. Prints one [PASS]/[FAIL] line per criterion, in order,
// after running the quick checks first and the ablation sweep last.
//
//   acceptance [work_dir]
//
// The sweep reuses finished runs under work_dir, so an interrupted gate
// resumes where it stopped.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "grad_check.hpp"
#include "ilnet/cli/commands.hpp"
#include "ilnet/cli/svg_plot.hpp"
#include "ilnet/eval/evaluate.hpp"
#include "ilnet/numerics/rng.hpp"
#include "ilnet/objective/wta.hpp"
#include "ilnet/scene/generator.hpp"
#include "ilnet/scene/scenario_io.hpp"
#include "model_fixtures.hpp"
#include "oracles.hpp"
#include "stage_outputs.hpp"

using namespace ilnet;
using namespace ilnet::testing;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1

Outcome gradient_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  const scene::Scenario s = micro_scenario(3);
  const model::ModelConfig cfg = micro_config();
  ParamStore store;
  const model::IlnetModel m = model::IlnetModel::create(cfg, 11, store);
  const model::SceneInputs in = model::build_scene_inputs(s, cfg);
  if (in.agents != 3) return {false, "micro scene has " + std::to_string(in.agents) + " agents"};
  const GradCheckResult r = check_gradients(store, scene_loss(m, store, in, objective::Task::kJoint), 1e-3, 1e-7, 4);
  const double secs = seconds_since(t0);
  return {r.max_rel_error < 1e-5 && r.max_abs_grad > 0.0 && secs < 120.0,
          std::to_string(store.parameter_count()) + " params, max rel err " + fmt("%.2e", r.max_rel_error) + " (" +
              r.worst + "), " + fmt("%.1f", secs) + " s"};
}

// ---------------------------------------------------------------- 2

Outcome se2_invariance() {
  const model::ModelConfig cfg;
  ParamStore store;
  const model::IlnetModel m = model::IlnetModel::create(cfg, 21, store);
  const eval::EvalOptions opts;
  Rng rng(2024);
  double traj = 0.0, metric = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto kind = static_cast<scene::ScenarioKind>(i % 4);
    const scene::Scenario s = scene::generate_scenario(kind, 9000 + static_cast<std::uint64_t>(i));
    const geo::Rigid2 tf{rng.uniform(-kPi, kPi), {rng.uniform(-500, 500), rng.uniform(-500, 500)}};
    const scene::Scenario moved = scene::transform_scenario(s, tf);
    const StageOutputs a = stage_outputs(m, store, s), b = stage_outputs(m, store, moved);
    traj = std::max({traj, max_abs_diff(a.proposals, b.proposals), max_abs_diff(a.final, b.final)});

    const eval::ScenarioEval ea = eval::evaluate_scenario(m, store, s, opts);
    const eval::ScenarioEval eb = eval::evaluate_scenario(m, store, moved, opts);
    if (ea.accuracy.size() != eb.accuracy.size()) return {false, "focal agent count changed"};
    for (std::size_t j = 0; j < ea.accuracy.size(); ++j) {
      const auto &x = ea.accuracy[j], &y = eb.accuracy[j];
      metric = std::max({metric, std::abs(x.min_ade - y.min_ade), std::abs(x.min_fde - y.min_fde),
                         std::abs(x.mr - y.mr), std::abs(x.brier_min_fde - y.brier_min_fde),
                         std::abs(x.rf - y.rf) / std::max(1.0, x.rf),
                         std::abs(ea.diversity[j].aae - eb.diversity[j].aae)});
    }
    metric = std::max({metric, std::abs(ea.joint.min_joint_ade - eb.joint.min_joint_ade),
                       std::abs(ea.joint.min_joint_fde - eb.joint.min_joint_fde)});
  }
  return {traj <= 1e-9 && metric <= 1e-9,
          "50 scenarios, max trajectory diff " + fmt("%.2e", traj) + ", max metric diff " + fmt("%.2e", metric)};
}

// ---------------------------------------------------------------- 3

Outcome permutation_equivariance() {
  const model::ModelConfig cfg;
  ParamStore store;
  const model::IlnetModel m = model::IlnetModel::create(cfg, 22, store);
  Rng rng(77);
  double worst = 0.0;
  std::string where = "-";
  for (int i = 0; i < 20; ++i) {
    const scene::Scenario s =
        scene::generate_scenario(static_cast<scene::ScenarioKind>(i % 4), 9500 + static_cast<std::uint64_t>(i));
    const std::size_t N = s.agents.size();
    std::vector<std::size_t> perm(N);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t j = N - 1; j > 0; --j) std::swap(perm[j], perm[rng.uniform_int(0, static_cast<std::int64_t>(j))]);
    scene::Scenario p = s;
    for (std::size_t j = 0; j < N; ++j) p.agents[j] = s.agents[perm[j]];
    const StageOutputs a = stage_outputs(m, store, s), b = stage_outputs(m, store, p);
    const double map = max_abs_diff(a.map_emb, b.map_emb);
    if (map > worst) worst = map, where = "map_emb";
    const auto xs = a.per_agent(), ys = b.per_agent();
    for (std::size_t o = 0; o < xs.size(); ++o) {
      const double d = permuted_diff(*xs[o].second, *ys[o].second, perm);
      if (d > worst) worst = d, where = xs[o].first;
    }
  }
  return {worst <= 1e-12, "20 scenarios, 15 stage outputs, max diff " + fmt("%.2e", worst) + " (" + where + ")"};
}

// ---------------------------------------------------------------- 4

Outcome oracle_equivalence() {
  std::size_t index_mismatch = 0;
  double worst = 0.0;
  auto track = [&](double got, double want, double scale = 1.0) {
    worst = std::max(worst, std::abs(got - want) / scale);
  };

  // Winner-takes-all selection, joint and marginal.
  Rng rng(4001);
  for (int i = 0; i < 1000; ++i) {
    const auto N = static_cast<std::size_t>(rng.uniform_int(1, 5)), K = static_cast<std::size_t>(rng.uniform_int(1, 6)),
               F = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const WtaCase c = random_case(rng, N, K, F, i % 2 == 0);
    for (auto task : {objective::Task::kJoint, objective::Task::kMarginal}) {
      if (objective::wta_select(c.preds, c.gt, c.valid, task) != wta_oracle(c, task)) ++index_mismatch;
    }
  }

  // minADE, minFDE, MR, Brier-minFDE, RF.
  for (int i = 0; i < 1000; ++i) {
    const auto K = static_cast<std::size_t>(rng.uniform_int(1, 6)), F = static_cast<std::size_t>(rng.uniform_int(1, 8));
    const bool coarse = i % 3 == 0;
    auto draw = [&] { return coarse ? static_cast<double>(rng.uniform_int(-3, 3)) : rng.uniform(-10.0, 10.0); };
    DenseArray preds({K, F, 2}), gt({F, 2});
    for (std::size_t j = 0; j < preds.size(); ++j) preds[j] = draw();
    for (std::size_t j = 0; j < gt.size(); ++j) gt[j] = draw();
    std::vector<double> probs(K), valid(F);
    double total = 0.0;
    for (auto& p : probs) total += (p = rng.uniform(0.0, 1.0));
    for (auto& p : probs) p /= total;
    for (auto& v : valid) v = rng.bernoulli(0.75) ? 1.0 : 0.0;
    valid[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(F) - 1))] = 1.0;
    const double thr = rng.uniform(0.5, 6.0);

    const eval::AccuracyMetrics got = eval::accuracy_metrics(preds, probs, gt, valid, thr);
    const Scan s = scan_modes(preds.ptr(), gt.ptr(), valid.data(), K, F);
    const std::size_t best = first_min(s.fde);
    double mean_fde = 0.0;
    for (double e : s.fde) mean_fde += e / static_cast<double>(K);
    if (got.best_mode != best) ++index_mismatch;
    track(got.min_ade, s.ade[first_min(s.ade)]);
    track(got.min_fde, s.fde[best]);
    track(got.mr, s.fde[best] > thr ? 1.0 : 0.0);
    track(got.brier_min_fde, s.fde[best] + (1.0 - probs[best]) * (1.0 - probs[best]));
    const double rf = std::max(mean_fde, eval::kRfFloor) / std::max(s.fde[best], eval::kRfFloor);
    track(got.rf, rf, std::max(1.0, rf));
  }

  // minJointADE, minJointFDE.
  for (int i = 0; i < 1000; ++i) {
    const auto N = static_cast<std::size_t>(rng.uniform_int(1, 5)), K = static_cast<std::size_t>(rng.uniform_int(1, 6)),
               F = static_cast<std::size_t>(rng.uniform_int(1, 6));
    DenseArray preds({N, K, F, 2}), gt({N, F, 2});
    std::vector<double> valid(N * F);
    for (std::size_t j = 0; j < preds.size(); ++j) preds[j] = rng.uniform(-8.0, 8.0);
    for (std::size_t j = 0; j < gt.size(); ++j) gt[j] = rng.uniform(-8.0, 8.0);
    for (auto& v : valid) v = rng.bernoulli(0.6) ? 1.0 : 0.0;
    valid[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(N * F) - 1))] = 1.0;
    std::vector<double> ade(K, 0.0), fde(K, 0.0);
    std::size_t labeled = 0;
    for (std::size_t n = 0; n < N; ++n) {
      if (std::none_of(valid.begin() + static_cast<long>(n * F), valid.begin() + static_cast<long>((n + 1) * F),
                       [](double v) { return v != 0.0; })) {
        continue;
      }
      ++labeled;
      const Scan s = scan_modes(preds.ptr() + n * K * F * 2, gt.ptr() + n * F * 2, valid.data() + n * F, K, F);
      for (std::size_t k = 0; k < K; ++k) ade[k] += s.ade[k], fde[k] += s.fde[k];
    }
    for (std::size_t k = 0; k < K; ++k) {
      ade[k] /= static_cast<double>(labeled);
      fde[k] /= static_cast<double>(labeled);
    }
    const eval::JointMetrics got = eval::joint_metrics(preds, gt, valid);
    if (got.best_mode != first_min(fde)) ++index_mismatch;
    track(got.min_joint_fde, fde[first_min(fde)]);
    track(got.min_joint_ade, ade[first_min(ade)]);
  }

  // DAO, DAC, AAE on generated maps.
  int instances = 0;
  for (int sc = 0; sc < 8; ++sc) {
    const scene::Scenario s = scene::generate_scenario(static_cast<scene::ScenarioKind>(sc % 4), 700 + sc);
    const eval::Box crop = eval::scenario_crop(s);
    const eval::DrivableRaster raster(s.map, eval::extend_with_map(crop, s.map));
    CellOracle cells(s.map, eval::kCellSize);
    std::size_t area = 0;
    const auto lo = raster.cell_of({crop.min_x, crop.min_y}), hi = raster.cell_of({crop.max_x, crop.max_y});
    for (long iy = lo.iy - 1; iy <= hi.iy + 1; ++iy) {
      for (long ix = lo.ix - 1; ix <= hi.ix + 1; ++ix) {
        if (eval::box_contains(crop, {(ix + 0.5) * eval::kCellSize, (iy + 0.5) * eval::kCellSize}) &&
            cells.drivable(ix, iy)) {
          ++area;
        }
      }
    }
    const auto& focal = s.agents[*s.agent_index(s.focal_ids.front())];
    const geo::Point start = focal.states[static_cast<std::size_t>(s.history - 1)].position;
    for (int rep = 0; rep < 125; ++rep, ++instances) {
      const auto K = static_cast<std::size_t>(rng.uniform_int(1, 6));
      std::vector<std::vector<geo::Point>> modes(K);
      for (std::size_t k = 0; k < K; ++k) {
        geo::Point p = start;
        const double heading = rng.uniform(-kPi, kPi), step = k == 0 && rep % 10 == 0 ? 0.0 : rng.uniform(0.0, 2.5);
        const double jitter = step == 0.0 ? 0.0 : 0.3;
        for (int f = 0; f < s.future; ++f) {
          p = {p.x + step * std::cos(heading) + rng.uniform(-jitter, jitter),
               p.y + step * std::sin(heading) + rng.uniform(-jitter, jitter)};
          modes[k].push_back(p);
        }
      }
      const eval::DiversityMetrics got = eval::diversity_metrics(modes, raster, crop);

      std::set<std::pair<long, long>> touched;
      std::size_t compliant = 0;
      for (const auto& mode : modes) {
        bool ok = true;
        for (const auto& p : mode) {
          const long ix = static_cast<long>(std::floor(p.x / eval::kCellSize));
          const long iy = static_cast<long>(std::floor(p.y / eval::kCellSize));
          if (!cells.drivable(ix, iy)) {
            ok = false;
            continue;
          }
          if (eval::box_contains(crop, {(ix + 0.5) * eval::kCellSize, (iy + 0.5) * eval::kCellSize})) {
            touched.insert({ix, iy});
          }
        }
        compliant += ok ? 1 : 0;
      }
      double angle = 0.0;
      std::size_t pairs = 0;
      for (std::size_t a = 0; a < K; ++a) {
        for (std::size_t b = a + 1; b < K; ++b) {
          const double ax = modes[a].back().x - modes[a].front().x, ay = modes[a].back().y - modes[a].front().y;
          const double bx = modes[b].back().x - modes[b].front().x, by = modes[b].back().y - modes[b].front().y;
          if (std::hypot(ax, ay) < 1e-9 || std::hypot(bx, by) < 1e-9) continue;
          angle += polar_angle_between(ax, ay, bx, by);
          ++pairs;
        }
      }
      if (got.aae_pairs != pairs) ++index_mismatch;
      track(got.dao, static_cast<double>(touched.size()) / static_cast<double>(area));
      track(got.dac, static_cast<double>(compliant) / static_cast<double>(K));
      track(got.aae, pairs == 0 ? 0.0 : angle / static_cast<double>(pairs));
    }
  }
  return {index_mismatch == 0 && worst <= 1e-12 && instances == 1000,
          "1000 instances per group, index mismatches " + std::to_string(index_mismatch) + ", max value diff " +
              fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- 10, 11

struct SmallRun {
  cli::RunConfig config;
  cli::TrainOutcome outcome;
};

cli::RunConfig small_config(const fs::path& root) {
  cli::RunConfig c;
  c.data_dir = (root / "data").string();
  c.out_dir = (root / "run").string();
  c.dataset.num_train = 8;
  c.dataset.num_val = 4;
  c.dataset.seed = 5;
  c.train.epochs = 2;
  c.train.seed = 13;
  return c;
}

Outcome determinism(const fs::path& root, SmallRun& run) {
  fs::remove_all(root);
  std::ostringstream log;
  run.config = small_config(root);
  const scene::SplitManifest manifest = cli::cmd_generate(run.config, log);
  run.outcome = cli::cmd_train(run.config, false, log);

  cli::RunConfig again = run.config;
  again.out_dir = (root / "run_again").string();
  cli::cmd_train(again, false, log);
  bool checkpoints = true;
  for (const char* ck : {"best", "last"}) {
    checkpoints = checkpoints && snapshot(fs::path(run.config.out_dir) / ck) == snapshot(fs::path(again.out_dir) / ck);
  }

  const fs::path re = root / "re_eval";
  cli::cmd_eval(run.config, fs::path(run.config.out_dir) / "best", "val", re, log);
  const fs::path orig = fs::path(run.config.out_dir) / "eval";
  const bool metrics = read_file(re / eval::kReportFileName) == read_file(orig / eval::kReportFileName) &&
                       read_file(re / eval::kPredictionsFileName) == read_file(orig / eval::kPredictionsFileName);

  // Scenario files: load -> serialize gives the stored bytes; generated scenarios survive text exactly.
  std::size_t files = 0, bad = 0;
  for (const auto& list : {manifest.train, manifest.val}) {
    for (const auto& rel : list) {
      const fs::path p = fs::path(run.config.data_dir) / rel;
      const scene::Scenario s = scene::load_scenario(p);
      ++files;
      if (scene::scenario_to_text(s) != read_file(p)) ++bad;
    }
  }
  for (int i = 0; i < 40; ++i) {
    const scene::Scenario s =
        scene::generate_scenario(static_cast<scene::ScenarioKind>(i % 4), 31000 + static_cast<std::uint64_t>(i));
    const std::string text = scene::scenario_to_text(s);
    const scene::Scenario back = scene::scenario_from_text(text);
    ++files;
    if (!(back == s) || scene::scenario_to_text(back) != text) ++bad;
  }
  return {checkpoints && metrics && bad == 0,
          std::string("checkpoints ") + (checkpoints ? "identical" : "DIFFER") + ", re-evaluation " +
              (metrics ? "bit-identical" : "DIFFERS") + ", scenario round trips " + std::to_string(files - bad) + "/" +
              std::to_string(files)};
}

Outcome plot_emission(const fs::path& root, const SmallRun& run) {
  if (run.outcome.fit.epochs.empty()) return {false, "no trained run"};
  const fs::path preds_file = fs::path(run.config.out_dir) / "eval" / eval::kPredictionsFileName;
  const auto preds = eval::predictions_from_json(nlohmann::json::parse(read_file(preds_file)));
  const scene::SplitManifest manifest =
      scene::load_manifest(fs::path(run.config.data_dir) / scene::kManifestFileName);
  const auto K = static_cast<std::size_t>(run.config.model.modes);
  std::size_t plots = 0, good = 0;
  for (const auto& rel : manifest.val) {
    const fs::path scenario_file = fs::path(run.config.data_dir) / rel;
    const scene::Scenario s = scene::load_scenario(scenario_file);
    const fs::path svg = root / "plots" / (s.id + ".svg");
    cli::cmd_plot(scenario_file, preds_file, svg);
    const std::string text = read_file(svg);
    ++plots;
    bool ok = well_formed_xml(text);
    const auto it = std::find_if(preds.begin(), preds.end(), [&](const auto& p) { return p.scenario_id == s.id; });
    if (it == preds.end()) continue;
    std::size_t focal = 0;
    for (const auto& a : it->agents) {
      if (!a.focal) continue;
      ++focal;
      const std::string agent = "data-agent=\"" + std::to_string(a.agent_id) + "\"";
      std::size_t lines = 0, pos = 0;
      while ((pos = text.find("<polyline class=\"prediction\" " + agent, pos)) != std::string::npos) ++lines, ++pos;
      ok = ok && lines == K && a.anchors.size() == K;
      for (std::size_t k = 0; k < a.anchors.size(); ++k) {
        const std::size_t at =
            text.find("<circle class=\"anchor\" " + agent + " data-mode=\"" + std::to_string(k) + "\"");
        if (at == std::string::npos) {
          ok = false;
          continue;
        }
        const std::size_t cx = text.find("cx=\"", at) + 4, cy = text.find("cy=\"", at) + 4;
        ok = ok && std::strtod(text.c_str() + cx, nullptr) == a.anchors[k].x &&
             std::strtod(text.c_str() + cy, nullptr) == a.anchors[k].y;
      }
    }
    std::size_t all_lines = 0, pos = 0;
    while ((pos = text.find("<polyline class=\"prediction\"", pos)) != std::string::npos) ++all_lines, ++pos;
    ok = ok && focal > 0 && all_lines == K * focal;
    good += ok ? 1 : 0;
  }
  return {plots > 0 && good == plots,
          std::to_string(good) + "/" + std::to_string(plots) + " plots well-formed with K=" + std::to_string(K) +
              " polylines per focal agent and exact anchor markers"};
}

// ---------------------------------------------------------------- 6..9, 5

const std::vector<std::string> kSweepRows{"ta_only", "forward", "inverse", "full"};
constexpr int kSweepEpochs = 5;
constexpr double kMaskRatio = 0.3;

cli::RunConfig sweep_config(const fs::path& root) {
  cli::RunConfig c;
  c.data_dir = (root / "data").string();
  c.out_dir = (root / "sweep").string();
  c.train.epochs = kSweepEpochs;
  c.ablation_rows = kSweepRows;
  c.ablation_seeds = {1, 2, 3};
  c.mask_ratios = {kMaskRatio};
  return c;
}

cli::AblationResult run_sweep(const fs::path& root) {
  const cli::RunConfig c = sweep_config(root);
  const fs::path echo = fs::path(c.data_dir) / cli::kConfigEchoName;
  if (!fs::exists(echo) || nlohmann::json::parse(read_file(echo)) != cli::config_to_json(c)) {
    std::cout << "generating " << c.dataset.num_train << "/" << c.dataset.num_val << " scenarios\n" << std::flush;
    cli::cmd_generate(c, std::cout);
  }
  return cli::cmd_ablate(c, std::cout);
}

std::string row_summary(const cli::RowResult& r) {
  return r.name + " " + fmt("%.4f", r.joint_fde_mean) + " +- " + fmt("%.4f", r.joint_fde_spread);
}

Outcome ablation_direction(const cli::AblationResult& a) {
  const cli::RowResult *ta = a.row("ta_only"), *inv = a.row("inverse");
  if (!ta || !inv || !ta->ok || !inv->ok) return {false, "missing or failed rows"};
  double slowest = 0.0;
  for (const auto& row : a.rows) {
    for (double s : row.cpu_seconds) slowest = std::max(slowest, s);
  }
  const bool pass = inv->joint_fde_mean < ta->joint_fde_mean && slowest <= 900.0;
  return {pass, "minJointFDE " + row_summary(*inv) + " vs " + row_summary(*ta) + "; slowest run " +
                    fmt("%.0f", slowest) + " s CPU"};
}

Outcome order_direction(const cli::AblationResult& a) {
  const cli::RowResult *fwd = a.row("forward"), *inv = a.row("inverse");
  if (!fwd || !inv || !fwd->ok || !inv->ok) return {false, "missing or failed rows"};
  const double gap = inv->joint_fde_mean / fwd->joint_fde_mean - 1.0;
  const bool tie = std::abs(gap) <= 0.005;
  return {inv->joint_fde_mean <= fwd->joint_fde_mean,
          "minJointFDE " + row_summary(*inv) + " vs " + row_summary(*fwd) + " (" + fmt("%+.2f", 100.0 * gap) + "%" +
              (tie ? ", within the 0.5% tie band" : "") + ")"};
}

Outcome anchor_direction(const cli::AblationResult& a) {
  const cli::RowResult *full = a.row("full"), *inv = a.row("inverse");
  if (!full || !inv || !full->ok || !inv->ok) return {false, "missing or failed rows"};
  return {full->joint_fde_mean <= inv->joint_fde_mean,
          "minJointFDE dynamic " + row_summary(*full) + " vs midpoint " + row_summary(*inv)};
}

Outcome mask_direction(const cli::AblationResult& a) {
  const cli::MaskResult *il = a.mask("inverse", kMaskRatio), *ta = a.mask("ta_only", kMaskRatio);
  if (!il || !ta) return {false, "missing mask evaluations"};
  std::string extra;
  if (const cli::MaskResult* full = a.mask("full", kMaskRatio)) {
    extra = "; with dynamic anchors " + fmt("%.2f", 100.0 * full->degradation) + "%";
  }
  return {il->degradation <= ta->degradation, "minFDE degradation at 30% masking: FA+HA " +
                                                  fmt("%.2f", 100.0 * il->degradation) + "% vs TA only " +
                                                  fmt("%.2f", 100.0 * ta->degradation) + "%" + extra};
}

double das_overhead(model::ModelConfig cfg) {
  cfg.anchor_mode = model::AnchorMode::kDynamic;
  ParamStore with;
  model::IlnetModel::create(cfg, 1, with);
  cfg.anchor_mode = model::AnchorMode::kMidpoint;
  ParamStore without;
  model::IlnetModel::create(cfg, 1, without);
  return static_cast<double>(with.parameter_count()) / static_cast<double>(without.parameter_count()) - 1.0;
}

Outcome das_contract(const fs::path& root, const cli::AblationResult& a) {
  const cli::RowResult* full = a.row("full");
  if (!full || !full->ok) return {false, "full row missing or failed"};
  const cli::RunConfig c = sweep_config(root);
  const auto F = static_cast<std::size_t>(c.model.future);
  std::size_t checked = 0, scenarios = 0, bad = 0;
  double worst = 0.0;
  for (std::uint64_t seed : full->seeds) {
    const fs::path file = fs::path(c.out_dir) / "full" / ("seed" + std::to_string(seed)) / "eval" /
                          eval::kPredictionsFileName;
    for (const auto& p : eval::predictions_from_json(nlohmann::json::parse(read_file(file)))) {
      ++scenarios;
      for (const auto& ag : p.agents) {
        for (std::size_t k = 0; k < ag.anchors.size(); ++k) {
          ++checked;
          const double f = ag.anchor_index[k];
          if (!(f >= 0.0 && f <= static_cast<double>(F - 1))) {
            ++bad;
            continue;
          }
          // Index i is future step i.
          const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(std::floor(f)), F - 2);
          const double u = f - static_cast<double>(i);
          const auto& pts = ag.proposals[k];
          const geo::Point q{pts[i].x + u * (pts[i + 1].x - pts[i].x), pts[i].y + u * (pts[i + 1].y - pts[i].y)};
          worst = std::max({worst, std::abs(q.x - ag.anchors[k].x), std::abs(q.y - ag.anchors[k].y)});
        }
      }
    }
  }
  model::ModelConfig paper_scale;
  paper_scale.history = 10;
  paper_scale.future = 30;
  paper_scale.modes = 6;
  paper_scale.dim = 128;
  paper_scale.heads = 8;
  const double paper = das_overhead(paper_scale), desk = das_overhead(c.model);
  return {bad == 0 && checked > 0 && worst <= 1e-12 && paper < 1e-3,
          std::to_string(checked) + " anchors over " + std::to_string(scenarios) + " evaluated scenarios, " +
              std::to_string(bad) + " out of range, max off-polyline " + fmt("%.2e", worst) +
              "; selector overhead " + fmt("%.4f", 100.0 * paper) + "% at D=128 (" + fmt("%.3f", 100.0 * desk) +
              "% at the desk D=" + std::to_string(c.model.dim) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance");
  fs::create_directories(root);
  std::map<int, std::pair<std::string, Outcome>> results;
  auto run = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    std::cout << "-- criterion " << id << " (" << name << ")\n" << std::flush;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "   " << (o.pass ? "pass" : "fail") << ": " << o.detail << " [" << fmt("%.0f", seconds_since(t0))
              << " s]\n"
              << std::flush;
    results[id] = {name, o};
  };

  SmallRun small;
  run(1, "gradient fidelity", gradient_fidelity);
  run(2, "SE(2) invariance", se2_invariance);
  run(3, "permutation equivariance", permutation_equivariance);
  run(4, "oracle equivalence", oracle_equivalence);
  run(10, "determinism and persistence", [&] { return determinism(root / "small", small); });
  run(11, "plot emission", [&] { return plot_emission(root / "small", small); });

  cli::AblationResult sweep;
  std::string sweep_error;
  try {
    sweep = run_sweep(root);
  } catch (const std::exception& e) {
    sweep_error = e.what();
  }
  auto with_sweep = [&](const std::function<Outcome(const cli::AblationResult&)>& fn) {
    return [&, fn] { return sweep_error.empty() ? fn(sweep) : Outcome{false, "sweep failed: " + sweep_error}; };
  };
  run(6, "IL attention ablation direction", with_sweep(ablation_direction));
  run(7, "inverse vs forward order", with_sweep(order_direction));
  run(8, "dynamic vs midpoint anchors", with_sweep(anchor_direction));
  run(9, "history masking robustness", with_sweep(mask_direction));
  run(5, "anchor selection contract", with_sweep([&](const cli::AblationResult& a) { return das_contract(root, a); }));

  std::cout << "\n";
  int failed = 0;
  for (const auto& [id, r] : results) {
    std::cout << (r.second.pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << r.first << " - "
              << r.second.detail << "\n";
    failed += r.second.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria pass\n" : std::to_string(failed) + " criteria fail\n");
  return failed == 0 ? 0 : 1;
}
