// ilnet: generate | train | eval | ablate | plot

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ilnet/cli/commands.hpp"
#include "ilnet/errors.hpp"

namespace fs = std::filesystem;
using namespace ilnet;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> mask_ratio;
  std::string task;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* app, Common& o, bool with_out = true) {
  app->add_option("--config", o.config, "JSON run config");
  app->add_option("--seed", o.seed, "seed");
  if (with_out) app->add_option("--out", o.out, "output directory");
  app->add_option("--task", o.task, "joint | marginal")->check(CLI::IsMember({"joint", "marginal"}));
  app->add_option("--mask-ratio", o.mask_ratio, "history mask ratio at evaluation");
  app->add_option("--set", o.overrides, "key=value config override (repeatable)");
}

cli::RunConfig resolve(const Common& o, const std::string& fallback_config, bool seed_is_data) {
  cli::RunConfig c;
  if (!o.config.empty()) {
    c = cli::load_config(o.config);
  } else if (!fallback_config.empty() && fs::exists(fallback_config)) {
    c = cli::load_config(fallback_config);
  }
  for (const auto& kv : o.overrides) cli::apply_override(c, kv);
  if (o.seed) cli::set_config_value(c, seed_is_data ? "data_seed" : "seed", *o.seed);
  if (!o.task.empty()) cli::set_config_value(c, "task", o.task);
  if (o.mask_ratio) cli::set_config_value(c, "mask_ratio", *o.mask_ratio);
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory prediction with inverse interaction learning"};
  app.require_subcommand(1);

  Common gen, train, ev, abl;
  bool resume = false;
  std::string run_dir, checkpoint, split = "val";
  std::string scenario, predictions, svg_out;

  auto* g = app.add_subcommand("generate", "write a synthetic dataset");
  add_common(g, gen);
  auto* t = app.add_subcommand("train", "train a model");
  add_common(t, train);
  t->add_flag("--resume", resume, "continue from <out>/last");
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(e, ev);
  e->add_option("--run", run_dir, "run directory (config.json, best/)");
  e->add_option("--checkpoint", checkpoint, "checkpoint directory");
  e->add_option("--split", split, "train | val")->check(CLI::IsMember({"train", "val"}));
  auto* a = app.add_subcommand("ablate", "train the ablation grid and mask rows");
  add_common(a, abl);
  auto* p = app.add_subcommand("plot", "render a scenario and its predictions as SVG");
  p->add_option("--scenario", scenario, "scenario file")->required();
  p->add_option("--predictions", predictions, "predictions.json")->required();
  p->add_option("--out", svg_out, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (g->parsed()) {
      cli::RunConfig c = resolve(gen, "", true);
      if (!gen.out.empty()) c.data_dir = gen.out;
      cli::cmd_generate(c, std::cout);
    } else if (t->parsed()) {
      cli::RunConfig c = resolve(train, "", false);
      if (!train.out.empty()) c.out_dir = train.out;
      cli::cmd_train(c, resume, std::cout);
    } else if (e->parsed()) {
      const std::string echo = run_dir.empty() ? "" : (fs::path(run_dir) / cli::kConfigEchoName).string();
      cli::RunConfig c = resolve(ev, echo, false);
      const fs::path run = run_dir.empty() ? fs::path(c.out_dir) : fs::path(run_dir);
      const fs::path ckpt = checkpoint.empty() ? run / "best" : fs::path(checkpoint);
      fs::path out = ev.out;
      if (out.empty()) {
        char tag[32];
        std::snprintf(tag, sizeof(tag), "_mask%.2f", c.eval.mask_ratio);
        out = run / ("eval_" + split + (c.eval.mask_ratio > 0.0 ? std::string(tag) : std::string()));
      }
      cli::cmd_eval(c, ckpt, split, out, std::cout);
    } else if (a->parsed()) {
      cli::RunConfig c = resolve(abl, "", false);
      if (!abl.out.empty()) c.out_dir = abl.out;
      const cli::AblationResult r = cli::cmd_ablate(c, std::cout);
      std::cout << '\n' << cli::ablation_markdown(r);
      for (const auto& row : r.rows) {
        if (!row.ok) return kNumeric;
      }
    } else if (p->parsed()) {
      cli::cmd_plot(scenario, predictions, svg_out);
    }
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return kUsage;
  } catch (const NumericError& err) {
    std::cerr << "numeric failure: " << err.what() << '\n';
    return kNumeric;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kData;
  }
  return kOk;
}
