#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "ilnet/numerics/checkpoint.hpp"
#include "ilnet/objective/loss.hpp"
#include "ilnet/scene/scenario.hpp"

namespace ilnet::objective {

struct TrainOptions {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  int epochs = 30;
  int batch_size = 16;
  std::uint64_t seed = 1;
  Task task = Task::kJoint;
  int workers = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

/// Cosine annealing from `lr` at epoch 0 towards 0 after `epochs` epochs.
double cosine_lr(double lr, int epoch, int epochs);

/// Forward pass and loss of one scenario; with `grads` also the backward pass.
/// Throws NumericError naming the first non-finite tape node ("op#id").
LossBreakdown scenario_loss(const model::IlnetModel& model, const ParamStore& store, const scene::Scenario& s,
                            Task task, GradBuffer* grads);

/// Decoupled weight-decay Adam. Moments are stored per parameter, in store order.
class AdamW {
 public:
  AdamW() = default;
  explicit AdamW(const ParamStore& store);

  /// Applies store gradients (already averaged over the batch).
  void step(ParamStore& store, double lr, const TrainOptions& options);
  std::uint64_t steps() const { return steps_; }

  void save(Checkpoint& ckpt) const;
  void load(const Checkpoint& ckpt);

 private:
  std::vector<std::string> names_;
  std::vector<DenseArray> m_;
  std::vector<DenseArray> v_;
  std::uint64_t steps_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  LossBreakdown train;  ///< mean over the epoch's scenarios
  double val_metric = 0.0;
  bool best = false;
};

struct FitResult {
  std::vector<EpochRecord> epochs;  ///< epochs run by this call
  double best_metric = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
};

/// Validation score of the current parameters; lower is better.
using Validator = std::function<double(const ParamStore&)>;

/// Runs one epoch: shuffles with a seed derived from (seed, epoch), averages
/// scenario gradients per batch in scenario order, then steps the optimizer.
LossBreakdown train_epoch(const model::IlnetModel& model, ParamStore& store, AdamW& optimizer,
                          const std::vector<scene::Scenario>& data, const TrainOptions& options, int epoch);

/// Full training loop. Writes under `out_dir`:
///   best/      checkpoint of the epoch with the lowest validation metric
///   last/      parameters plus optimizer state after the latest epoch
///   loss_log.txt  one line per epoch
/// With `resume`, continues from last/ at the following epoch.
FitResult fit(const model::IlnetModel& model, ParamStore& store, const std::vector<scene::Scenario>& train,
              const Validator& validate, const TrainOptions& options, const std::filesystem::path& out_dir,
              bool resume, std::ostream* progress = nullptr);

/// Checkpoint metadata key holding the model fingerprint.
inline constexpr const char* kFingerprintKey = "model";

/// Loads checkpoint parameters into `store`; throws VersionError when the
/// checkpoint was written for a different model configuration.
void load_model_checkpoint(const std::filesystem::path& dir, const model::ModelConfig& config, ParamStore& store);

}  // namespace ilnet::objective
