#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ilnet/eval/raster.hpp"
#include "ilnet/numerics/dense_array.hpp"

namespace ilnet::eval {

inline constexpr double kDefaultMissThreshold = 2.0;  ///< meters
inline constexpr double kRfFloor = 1e-6;

/// Single-agent accuracy. ADE averages the labeled steps; FDE uses the last
/// labeled step. The best mode minimizes FDE (lowest index on ties).
struct AccuracyMetrics {
  double min_ade = 0.0;
  double min_fde = 0.0;
  double mr = 0.0;  ///< 1 when min_fde exceeds the threshold
  double brier_min_fde = 0.0;
  double rf = 1.0;  ///< max(mean FDE over modes, kRfFloor) / max(min_fde, kRfFloor)
  std::size_t best_mode = 0;
};

/// preds [K, F, 2], probs [K] summing to 1 (+-1e-6), gt [F, 2], valid [F].
/// Throws DataError on a probability sum violation or when no step is labeled.
AccuracyMetrics accuracy_metrics(const DenseArray& preds, const std::vector<double>& probs, const DenseArray& gt,
                                 const std::vector<double>& valid, double miss_threshold = kDefaultMissThreshold);

struct JointMetrics {
  double min_joint_ade = 0.0;
  double min_joint_fde = 0.0;
  std::size_t best_mode = 0;
};

/// preds [N, K, F, 2], gt [N, F, 2], valid [N * F]. Per mode, ADE and FDE
/// are averaged over agents with a labeled step, then minimized over modes.
JointMetrics joint_metrics(const DenseArray& preds, const DenseArray& gt, const std::vector<double>& valid);

struct DiversityMetrics {
  double dao = 0.0;  ///< drivable cells touched by any mode / drivable cells in the crop
  double dac = 0.0;  ///< fraction of modes with every point on a drivable cell
  double aae = 0.0;  ///< mean angle (rad) between mode displacement vectors
  std::size_t aae_pairs = 0;  ///< mode pairs with two non-degenerate vectors
};

/// Modes as global-frame point sequences. Displacement vectors run from each
/// mode's first to its last point; pairs with a vector shorter than 1e-9 m
/// are skipped.
DiversityMetrics diversity_metrics(const std::vector<std::vector<geo::Point>>& modes, const DrivableRaster& raster,
                                   const Box& crop);

/// Means over evaluated agents (single-agent metrics) and scenarios (joint
/// metrics). AAE averages only agents with at least one valid pair.
struct MetricReport {
  double min_ade = 0.0;
  double min_fde = 0.0;
  double mr = 0.0;
  double brier_min_fde = 0.0;
  double min_joint_ade = 0.0;
  double min_joint_fde = 0.0;
  double rf = 0.0;
  double dao = 0.0;
  double dac = 0.0;
  double aae = 0.0;
  std::size_t agents = 0;
  std::size_t scenarios = 0;
  std::size_t aae_agents = 0;
};

/// Sums in insertion order, so equal inputs give bit-identical means.
class MetricAccumulator {
 public:
  void add_agent(const AccuracyMetrics& a, const DiversityMetrics& d);
  void add_scenario(const JointMetrics& j);
  MetricReport report() const;

 private:
  MetricReport sum_;
};

/// Names of the ten metrics in report order.
const std::vector<std::string>& metric_names();
/// Value of a metric by name; throws ArgumentError for unknown names.
double metric_value(const MetricReport& r, const std::string& name);

}  // namespace ilnet::eval
