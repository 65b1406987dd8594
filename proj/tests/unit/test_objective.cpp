#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "grad_check.hpp"
#include "ilnet/errors.hpp"
#include "ilnet/objective/trainer.hpp"
#include "model_fixtures.hpp"

using namespace ilnet;
using namespace ilnet::objective;
using namespace ilnet::testing;
namespace fs = std::filesystem;

namespace {

model::ForwardResult constant_outputs(Tape& tape, const DenseArray& proposals, const DenseArray& finals,
                                      const DenseArray& logits) {
  model::ForwardResult r;
  r.proposals = tape.constant(proposals);
  r.refine.final = tape.constant(finals);
  r.refine.logits = tape.constant(logits);
  return r;
}

DenseArray targets_for_all_modes(const model::SceneInputs& in) {
  const std::size_t nodes = in.agents * in.history, K = in.modes, F = in.future;
  DenseArray out({nodes, K, F, 2});
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t k = 0; k < K; ++k) std::copy_n(in.targets.ptr() + i * F * 2, F * 2, out.ptr() + (i * K + k) * F * 2);
  }
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

/// Every regular file under `dir`, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return out;
}

std::vector<scene::Scenario> micro_set(int n) {
  std::vector<scene::Scenario> out;
  for (int i = 0; i < n; ++i) out.push_back(micro_scenario(40 + i, static_cast<scene::ScenarioKind>(i % 4)));
  return out;
}

}  // namespace

TEST_CASE("WTA matches exhaustive enumeration") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto N = static_cast<std::size_t>(rng.uniform_int(1, 5));
    const auto K = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const auto F = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const WtaCase c = random_case(rng, N, K, F, i % 2 == 0);
    for (Task task : {Task::kJoint, Task::kMarginal}) {
      REQUIRE(wta_select(c.preds, c.gt, c.valid, task) == wta_oracle(c, task));
    }
  }
}

TEST_CASE("WTA examples") {
  Rng rng(6);
  SUBCASE("one mode") {
    const WtaCase c = random_case(rng, 3, 1, 4, false);
    CHECK(wta_select(c.preds, c.gt, c.valid, Task::kJoint) == std::vector<std::size_t>(3, 0));
    CHECK(wta_select(c.preds, c.gt, c.valid, Task::kMarginal) == std::vector<std::size_t>(3, 0));
  }
  SUBCASE("exact overlay wins") {
    WtaCase c = random_case(rng, 1, 2, 4, false);
    std::copy_n(c.gt.ptr(), 8, c.preds.ptr() + 8);
    CHECK(wta_select(c.preds, c.gt, c.valid, Task::kJoint) == std::vector<std::size_t>{1});
    CHECK(wta_select(c.preds, c.gt, c.valid, Task::kMarginal) == std::vector<std::size_t>{1});
  }
  SUBCASE("single agent: joint equals marginal") {
    for (int i = 0; i < 100; ++i) {
      const WtaCase c = random_case(rng, 1, 6, 5, i % 2 == 0);
      CHECK(wta_select(c.preds, c.gt, c.valid, Task::kJoint) == wta_select(c.preds, c.gt, c.valid, Task::kMarginal));
    }
  }
  SUBCASE("shared translation keeps the choice") {
    for (int i = 0; i < 100; ++i) {
      WtaCase c = random_case(rng, 3, 6, 5, false);
      const auto before = wta_select(c.preds, c.gt, c.valid, Task::kJoint);
      const auto before_m = wta_select(c.preds, c.gt, c.valid, Task::kMarginal);
      // Power-of-two offsets keep the differences exact.
      for (std::size_t j = 0; j < c.preds.size(); ++j) c.preds[j] += (j % 2 ? 64.0 : -128.0);
      for (std::size_t j = 0; j < c.gt.size(); ++j) c.gt[j] += (j % 2 ? 64.0 : -128.0);
      CHECK(wta_select(c.preds, c.gt, c.valid, Task::kJoint) == before);
      CHECK(wta_select(c.preds, c.gt, c.valid, Task::kMarginal) == before_m);
    }
  }
  SUBCASE("nothing valid") {
    WtaCase c = random_case(rng, 2, 3, 4, false);
    std::fill(c.valid.begin(), c.valid.end(), 0.0);
    CHECK_THROWS_AS(wta_select(c.preds, c.gt, c.valid, Task::kJoint), DataError);
  }
  CHECK(task_from_name("marginal") == Task::kMarginal);
  CHECK_THROWS_AS(task_from_name("both"), ConfigError);
}

TEST_CASE("perfect predictions with saturated logits cost nothing") {
  const model::ModelConfig cfg = micro_config();
  const model::SceneInputs in = model::build_scene_inputs(micro_scenario(7), cfg);
  const DenseArray perfect = targets_for_all_modes(in);
  DenseArray logits({in.agents * in.history, in.modes}, -40.0);
  for (std::size_t i = 0; i < logits.dim(0); ++i) logits[i * in.modes] = 40.0;
  Tape tape;
  const LossTerms t = compute_loss(constant_outputs(tape, perfect, perfect, logits), in, Task::kJoint, 1.0);
  CHECK(t.values.reg_pro == 0.0);
  CHECK(t.values.reg_fin == 0.0);
  CHECK(t.values.total < 1e-6);
  CHECK(t.values.total >= 0.0);
}

TEST_CASE("uniform logits cost ln K per supervised pair") {
  model::ModelConfig cfg = micro_config();
  cfg.modes = 6;
  const model::SceneInputs in = model::build_scene_inputs(micro_scenario(8), cfg);
  Rng rng(3);
  const DenseArray pro = random_array({in.agents * in.history, 6, in.future, 2}, rng);
  Tape tape;
  const LossTerms t =
      compute_loss(constant_outputs(tape, pro, pro, DenseArray({in.agents * in.history, 6}, 0.25)), in, Task::kMarginal, 1.0);
  CHECK(t.values.cls_fin == doctest::Approx(std::log(6.0)).epsilon(1e-13));
}

TEST_CASE("regression terms match a direct Huber sum") {
  model::ModelConfig cfg = micro_config();
  cfg.modes = 3;
  const model::SceneInputs in = model::build_scene_inputs(micro_scenario(9, scene::ScenarioKind::kMerge), cfg);
  const std::size_t nodes = in.agents * in.history, K = 3, F = in.future;
  Rng rng(4);
  DenseArray pro = targets_for_all_modes(in), fin = pro;
  for (std::size_t i = 0; i < pro.size(); ++i) {
    pro[i] += rng.uniform(-3.0, 3.0);
    fin[i] += rng.uniform(-0.8, 0.8);
  }
  const DenseArray logits = random_array({nodes, K}, rng);
  for (Task task : {Task::kJoint, Task::kMarginal}) {
    Tape tape;
    const LossTerms t = compute_loss(constant_outputs(tape, pro, fin, logits), in, task, 1.0);
    auto huber = [](double r) { return std::abs(r) <= 1.0 ? 0.5 * r * r : std::abs(r) - 0.5; };
    double reg_pro = 0.0, reg_fin = 0.0, cls = 0.0;
    std::size_t supervised = 0;
    for (std::size_t i = 0; i < nodes; ++i) {
      if (in.last_valid[i] < 0) continue;
      ++supervised;
      double count = 0.0, sp = 0.0, sf = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        if (in.target_valid[i * F + f] == 0.0) continue;
        count += 1.0;
        for (int c = 0; c < 2; ++c) {
          const double g = in.targets[(i * F + f) * 2 + c];
          sp += huber(pro[((i * K + t.pro_modes[i]) * F + f) * 2 + c] - g);
          sf += huber(fin[((i * K + t.fin_modes[i]) * F + f) * 2 + c] - g);
        }
      }
      reg_pro += sp / (2.0 * count);
      reg_fin += sf / (2.0 * count);
      double mx = -1e300;
      for (std::size_t k = 0; k < K; ++k) mx = std::max(mx, logits[i * K + k]);
      double z = 0.0;
      for (std::size_t k = 0; k < K; ++k) z += std::exp(logits[i * K + k] - mx);
      cls += mx + std::log(z) - logits[i * K + t.fin_modes[i]];
    }
    CHECK(t.values.supervised == supervised);
    CHECK(t.values.reg_pro == doctest::Approx(reg_pro / supervised).epsilon(1e-12));
    CHECK(t.values.reg_fin == doctest::Approx(reg_fin / supervised).epsilon(1e-12));
    CHECK(t.values.cls_fin == doctest::Approx(cls / supervised).epsilon(1e-12));
    CHECK(t.values.total == doctest::Approx(t.values.reg_pro + t.values.reg_fin + t.values.cls_fin).epsilon(1e-15));
  }
}

TEST_CASE("loss is finite and non-negative on generated scenes") {
  model::ModelConfig cfg;
  cfg.dim = 16;
  ParamStore store;
  const model::IlnetModel m = model::IlnetModel::create(cfg, 3, store);
  for (int i = 0; i < 8; ++i) {
    const scene::Scenario s = scene::generate_scenario(static_cast<scene::ScenarioKind>(i % 4), 900 + i);
    for (Task task : {Task::kJoint, Task::kMarginal}) {
      const LossBreakdown b = scenario_loss(m, store, s, task, nullptr);
      CHECK(std::isfinite(b.total));
      CHECK(b.reg_pro >= 0.0);
      CHECK(b.reg_fin >= 0.0);
      CHECK(b.cls_fin >= 0.0);
    }
  }
}

TEST_CASE("marginal loss gradients match finite differences") {
  const scene::Scenario s = micro_scenario(12, scene::ScenarioKind::kFollow);
  // Wide Huber band: the stencil must not straddle the kink.
  model::ModelConfig cfg = micro_config();
  cfg.huber_delta = 50.0;
  ParamStore store;
  const model::IlnetModel m = model::IlnetModel::create(cfg, 5, store);
  const model::SceneInputs in = model::build_scene_inputs(s, cfg);
  const GradCheckResult r = check_gradients(store, scene_loss(m, store, in, Task::kMarginal), 1e-3, 1e-7, 4, "refine.");
  INFO(r.worst);
  CHECK(r.max_rel_error < 1e-5);
}

TEST_CASE("cosine schedule") {
  CHECK(cosine_lr(2e-3, 0, 30) == 2e-3);
  CHECK(cosine_lr(2e-3, 30, 30) == doctest::Approx(0.0));
  CHECK(cosine_lr(2e-3, 15, 30) == doctest::Approx(1e-3).epsilon(1e-15));
  CHECK(cosine_lr(2e-3, 29, 30) < 1e-5);
  for (int e = 1; e <= 30; ++e) CHECK(cosine_lr(1.0, e, 30) < cosine_lr(1.0, e - 1, 30));
}

TEST_CASE("AdamW first step") {
  ParamStore store;
  store.add("w", {3}) = DenseArray({3}, std::vector<double>{0.5, -1.0, 2.0});
  store.entry("w").grad = DenseArray({3}, std::vector<double>{0.1, -3.0, 0.0});
  TrainOptions o;
  o.weight_decay = 0.01;
  AdamW opt(store);
  opt.step(store, 0.1, o);
  const double expect[3] = {0.5 - 0.1 * (0.1 / (0.1 + 1e-8) + 0.01 * 0.5), -1.0 - 0.1 * (-3.0 / (3.0 + 1e-8) - 0.01),
                            2.0 - 0.1 * 0.01 * 2.0};
  for (int i = 0; i < 3; ++i) CHECK(store.value("w")[i] == doctest::Approx(expect[i]).epsilon(1e-14));
  CHECK(opt.steps() == 1);

  Checkpoint ck;
  opt.save(ck);
  AdamW back(store);
  back.load(ck);
  CHECK(back.steps() == 1);
  Checkpoint ck2;
  back.save(ck2);
  REQUIRE(ck2.arrays.size() == ck.arrays.size());
  for (std::size_t i = 0; i < ck.arrays.size(); ++i) CHECK(ck2.arrays[i].second.storage() == ck.arrays[i].second.storage());
}

TEST_CASE("training is deterministic and worker-count independent") {
  const auto data = micro_set(6);
  const model::ModelConfig cfg = micro_config();
  auto run = [&](int workers) {
    ParamStore store;
    const model::IlnetModel m = model::IlnetModel::create(cfg, 1, store);
    AdamW opt(store);
    TrainOptions o;
    o.batch_size = 4;
    o.workers = workers;
    std::vector<double> losses;
    for (int e = 0; e < 2; ++e) {
      const LossBreakdown b = train_epoch(m, store, opt, data, o, e);
      losses.insert(losses.end(), {b.total, b.reg_pro, b.reg_fin, b.cls_fin});
    }
    std::vector<double> flat;
    for (const auto& e : store.entries()) flat.insert(flat.end(), e.value.values().begin(), e.value.values().end());
    return std::pair{losses, flat};
  };
  const auto a = run(1), b = run(1), c = run(3);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.first == c.first);
  CHECK(a.second == c.second);
}

TEST_CASE("resume continues the schedule and reproduces the uninterrupted run") {
  const auto data = micro_set(4);
  const auto val = micro_set(2);
  const model::ModelConfig cfg = micro_config();
  TrainOptions o;
  o.epochs = 3;
  o.batch_size = 2;
  const fs::path root = fs::temp_directory_path() / "ilnet_test_resume";
  fs::remove_all(root);

  auto metric = [&](const model::IlnetModel& m) {
    return [&m, &val](const ParamStore& s) {
      double total = 0.0;
      for (const auto& v : val) total += scenario_loss(m, s, v, Task::kJoint, nullptr).total;
      return total;
    };
  };
  {
    ParamStore store;
    const model::IlnetModel m = model::IlnetModel::create(cfg, 1, store);
    const FitResult r = fit(m, store, data, metric(m), o, root / "straight", false);
    CHECK(r.epochs.size() == 3);
  }
  {
    ParamStore store;
    const model::IlnetModel m = model::IlnetModel::create(cfg, 1, store);
    int calls = 0;
    const auto inner = metric(m);
    const Validator crash_in_epoch_two = [&](const ParamStore& s) {
      if (++calls == 2) throw std::runtime_error("interrupted");
      return inner(s);
    };
    CHECK_THROWS(fit(m, store, data, crash_in_epoch_two, o, root / "resumed", false));
  }
  {
    ParamStore store;
    const model::IlnetModel m = model::IlnetModel::create(cfg, 99, store);
    const FitResult r = fit(m, store, data, metric(m), o, root / "resumed", true);
    REQUIRE(r.epochs.size() == 2);
    CHECK(r.epochs.front().epoch == 1);
    CHECK(r.epochs.front().lr == cosine_lr(o.lr, 1, 3));
  }
  CHECK(snapshot(root / "straight") == snapshot(root / "resumed"));

  SUBCASE("identical seeds give byte-identical checkpoints") {
    ParamStore store;
    const model::IlnetModel m = model::IlnetModel::create(cfg, 1, store);
    fit(m, store, data, metric(m), o, root / "again", false);
    CHECK(snapshot(root / "straight") == snapshot(root / "again"));
  }
  SUBCASE("checkpoints refuse another configuration") {
    model::ModelConfig other = cfg;
    other.disable_fa = true;
    ParamStore store;
    model::IlnetModel::create(other, 1, store);
    CHECK_THROWS_AS(load_model_checkpoint(root / "straight" / "best", other, store), VersionError);
  }
  fs::remove_all(root);
}

TEST_CASE("non-finite loss names the failing node") {
  const scene::Scenario s = micro_scenario(13);
  const model::ModelConfig cfg = micro_config();
  ParamStore store;
  const model::IlnetModel m = model::IlnetModel::create(cfg, 5, store);
  store.value("interaction.decoder.1.b")[0] = std::nan("");
  GradBuffer grads(store);
  try {
    scenario_loss(m, store, s, Task::kJoint, &grads);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find('#') != std::string::npos);
  }
}
