#include "ilnet/objective/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "ilnet/errors.hpp"
#include "ilnet/numerics/parallel.hpp"

namespace ilnet::objective {
namespace {

void check_finite(const Tape& tape, const Var& loss, const std::string& scenario) {
  if (std::isfinite(loss.value()[0])) return;
  const auto where = tape.first_non_finite();
  throw NumericError("non-finite loss on scenario " + scenario + " (first non-finite value at " +
                     where.value_or("loss") + ")");
}

void check_finite(const GradBuffer& grads, const ParamStore& store, const std::string& scenario) {
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (double g : grads[i].values()) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient of " + store.entries()[i].name + " on scenario " + scenario);
      }
    }
  }
}

Checkpoint model_checkpoint(const model::IlnetModel& model, const ParamStore& store, int epoch) {
  Checkpoint ckpt;
  ckpt.meta[kFingerprintKey] = model.config().fingerprint();
  ckpt.meta["epoch"] = std::to_string(epoch);
  append_params(ckpt, store);
  return ckpt;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

double cosine_lr(double lr, int epoch, int epochs) {
  if (epochs <= 0) return lr;
  return 0.5 * lr * (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(epochs)));
}

LossBreakdown scenario_loss(const model::IlnetModel& model, const ParamStore& store, const scene::Scenario& s,
                            Task task, GradBuffer* grads) {
  const model::SceneInputs in = model::build_scene_inputs(s, model.config());
  Tape tape;
  const model::ForwardResult out = model.forward(tape, store, in);
  const LossTerms terms = compute_loss(out, in, task, model.config().huber_delta);
  check_finite(tape, terms.total, s.id);
  if (grads) {
    tape.backward(terms.total, *grads);
    check_finite(*grads, store, s.id);
  }
  return terms.values;
}

AdamW::AdamW(const ParamStore& store) {
  for (const auto& e : store.entries()) {
    names_.push_back(e.name);
    m_.emplace_back(e.value.shape());
    v_.emplace_back(e.value.shape());
  }
}

void AdamW::step(ParamStore& store, double lr, const TrainOptions& o) {
  ++steps_;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(steps_));
  auto& entries = store.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    DenseArray& p = entries[i].value;
    const DenseArray& g = entries[i].grad;
    DenseArray& m = m_[i];
    DenseArray& v = v_[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g[j];
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g[j] * g[j];
      const double update = (m[j] / c1) / (std::sqrt(v[j] / c2) + o.adam_eps);
      p[j] -= lr * (update + o.weight_decay * p[j]);
    }
  }
}

void AdamW::save(Checkpoint& ckpt) const {
  ckpt.meta["adam_steps"] = std::to_string(steps_);
  for (std::size_t i = 0; i < names_.size(); ++i) {
    ckpt.arrays.emplace_back("adam_m/" + names_[i], m_[i]);
    ckpt.arrays.emplace_back("adam_v/" + names_[i], v_[i]);
  }
}

void AdamW::load(const Checkpoint& ckpt) {
  const auto it = ckpt.meta.find("adam_steps");
  if (it == ckpt.meta.end()) throw DataError("checkpoint has no optimizer state");
  steps_ = std::stoull(it->second);
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const DenseArray& m = ckpt.array("adam_m/" + names_[i]);
    const DenseArray& v = ckpt.array("adam_v/" + names_[i]);
    if (m.shape() != m_[i].shape() || v.shape() != v_[i].shape()) {
      throw DataError("optimizer state shape mismatch for " + names_[i]);
    }
    m_[i] = m;
    v_[i] = v;
  }
}

LossBreakdown train_epoch(const model::IlnetModel& model, ParamStore& store, AdamW& optimizer,
                          const std::vector<scene::Scenario>& data, const TrainOptions& options, int epoch) {
  if (data.empty()) throw DataError("empty training set");
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(options.seed, 1000 + static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  }
  const double lr = cosine_lr(options.lr, epoch, options.epochs);
  const auto batch = static_cast<std::size_t>(std::max(1, options.batch_size));
  const auto workers = static_cast<std::size_t>(std::max(1, options.workers));

  LossBreakdown sum;
  std::vector<GradBuffer> grads(batch, GradBuffer(store));
  std::vector<LossBreakdown> losses(batch);
  for (std::size_t start = 0; start < order.size(); start += batch) {
    const std::size_t count = std::min(batch, order.size() - start);
    auto run = [&](std::size_t j) {
      grads[j].zero();
      losses[j] = scenario_loss(model, store, data[order[start + j]], options.task, &grads[j]);
    };
    parallel_for(count, workers, run);
    // Accumulate in batch order so the worker count never changes the result.
    store.zero_grad();
    for (std::size_t j = 0; j < count; ++j) {
      grads[j].add_to(store, 1.0 / static_cast<double>(count));
      sum.reg_pro += losses[j].reg_pro;
      sum.reg_fin += losses[j].reg_fin;
      sum.cls_fin += losses[j].cls_fin;
      sum.total += losses[j].total;
      sum.supervised += losses[j].supervised;
    }
    optimizer.step(store, lr, options);
  }
  const double n = static_cast<double>(data.size());
  sum.reg_pro /= n;
  sum.reg_fin /= n;
  sum.cls_fin /= n;
  sum.total /= n;
  return sum;
}

FitResult fit(const model::IlnetModel& model, ParamStore& store, const std::vector<scene::Scenario>& train,
              const Validator& validate, const TrainOptions& options, const std::filesystem::path& out_dir,
              bool resume, std::ostream* progress) {
  std::filesystem::create_directories(out_dir);
  AdamW optimizer(store);
  FitResult result;
  int first_epoch = 0;
  const auto last_dir = out_dir / "last";
  const auto log_path = out_dir / "loss_log.txt";
  if (resume) {
    const Checkpoint ckpt = load_checkpoint(last_dir);
    if (ckpt.meta.at(kFingerprintKey) != model.config().fingerprint()) {
      throw VersionError("resume checkpoint was written for a different model configuration");
    }
    restore_params(ckpt, store);
    optimizer.load(ckpt);
    first_epoch = std::stoi(ckpt.meta.at("epoch")) + 1;
    result.best_epoch = std::stoi(ckpt.meta.at("best_epoch"));
    result.best_metric = std::stod(ckpt.meta.at("best_metric"));
  }
  std::ofstream log(log_path, resume ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot write " + log_path.string());
  if (!resume) log << "epoch lr total reg_pro reg_fin cls_fin val_metric best\n";

  for (int epoch = first_epoch; epoch < options.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = cosine_lr(options.lr, epoch, options.epochs);
    rec.train = train_epoch(model, store, optimizer, train, options, epoch);
    rec.val_metric = validate(store);
    if (!std::isfinite(rec.val_metric)) throw NumericError("non-finite validation metric at epoch " + std::to_string(epoch));
    if (rec.val_metric < result.best_metric) {
      rec.best = true;
      result.best_metric = rec.val_metric;
      result.best_epoch = epoch;
      save_checkpoint(out_dir / "best", model_checkpoint(model, store, epoch));
    }
    Checkpoint state = model_checkpoint(model, store, epoch);
    state.meta["best_epoch"] = std::to_string(result.best_epoch);
    char best_buf[40];
    std::snprintf(best_buf, sizeof(best_buf), "%.17g", result.best_metric);
    state.meta["best_metric"] = best_buf;
    optimizer.save(state);
    save_checkpoint(last_dir, state);

    log << epoch << ' ' << format_double(rec.lr * 1e3) << "e-3 " << format_double(rec.train.total) << ' '
        << format_double(rec.train.reg_pro) << ' ' << format_double(rec.train.reg_fin) << ' '
        << format_double(rec.train.cls_fin) << ' ' << format_double(rec.val_metric) << ' ' << (rec.best ? 1 : 0)
        << '\n';
    log.flush();
    if (progress) {
      *progress << "epoch " << epoch << " loss " << format_double(rec.train.total) << " val "
                << format_double(rec.val_metric) << (rec.best ? " *" : "") << '\n';
    }
    result.epochs.push_back(rec);
  }
  return result;
}

void load_model_checkpoint(const std::filesystem::path& dir, const model::ModelConfig& config, ParamStore& store) {
  const Checkpoint ckpt = load_checkpoint(dir);
  const auto it = ckpt.meta.find(kFingerprintKey);
  if (it == ckpt.meta.end() || it->second != config.fingerprint()) {
    throw VersionError("checkpoint " + dir.string() + " does not match the model configuration");
  }
  restore_params(ckpt, store);
}

}  // namespace ilnet::objective
