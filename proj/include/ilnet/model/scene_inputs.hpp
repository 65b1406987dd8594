#pragma once

#include <cstddef>
#include <vector>

#include "ilnet/geometry/geometry.hpp"
#include "ilnet/model/config.hpp"
#include "ilnet/numerics/attention.hpp"
#include "ilnet/numerics/dense_array.hpp"
#include "ilnet/scene/scenario.hpp"

namespace ilnet::model {

inline constexpr std::size_t kAgentFeatureDim = 8;   ///< speed, cos/sin of drift, length, width, category
inline constexpr std::size_t kPairFeatureDim = 5;    ///< scaled distance, cos/sin bearing, cos/sin relative heading
inline constexpr std::size_t kTemporalFeatureDim = 6;  ///< pair features + time gap
inline constexpr std::size_t kPolylineEdgeDim = kPairFeatureDim + scene::kNumPolylineKinds;
inline constexpr std::size_t kLaneEdgeDim = kPairFeatureDim + scene::kNumLaneLinkTypes + 1;
inline constexpr double kDistanceScale = 0.1;

/// Attention edges plus one raw feature row per distinct (destination, source)
/// pair. Mode-expanded relations reuse a pair's feature row for all K modes.
struct Relation {
  AttentionEdges edges;
  DenseArray features;  ///< [pairs, dim]; empty when there are no pairs

  std::size_t pairs() const { return features.empty() ? 0 : features.dim(0); }
};

/// Everything the forward pass needs from a scenario that does not depend on
/// parameters. Agent-time nodes are indexed n * H + t, query rows
/// (n * H + t) * K + k.
struct SceneInputs {
  std::size_t agents = 0;
  std::size_t history = 0;
  std::size_t future = 0;
  std::size_t modes = 0;
  std::size_t segments = 0;
  std::size_t polylines = 0;
  std::size_t focal = 0;  ///< index of the first focal agent

  DenseArray agent_features;      ///< [N*H, kAgentFeatureDim]
  std::vector<double> observed;   ///< [N*H], 1 for observed steps
  std::vector<geo::Pose> poses;   ///< [N*H], unobserved steps take the nearest observed pose
  geo::Pose scene_frame;          ///< focal agent at the last history step

  DenseArray segment_features;    ///< [G, 1] scaled centerline length
  DenseArray polyline_features;   ///< [P, 1] scaled polyline length
  std::vector<geo::Pose> segment_poses;
  Relation polyline_to_segment;   ///< rows G, sources P
  Relation lane_links;            ///< rows G, sources G

  Relation agent_map;     ///< rows N*H*K, sources G
  Relation temporal;      ///< rows N*H*K, sources N*H (same agent, earlier steps)
  Relation future_agents; ///< rows N*H*K, sources N*H (other agents, next step)
  Relation past_agents;   ///< rows N*H*K, sources N*H (other agents, previous step)
  Relation fact_agents;   ///< rows N*H*K, sources N*H*K (other agents, same step and mode)
  Relation fact_history;  ///< rows N*H*K, sources N*H*K (same agent and mode, earlier steps)
  Relation fact_modes;    ///< rows N*H*K, sources N*H*K (same agent and step, other modes)

  DenseArray history_scene;  ///< [N, H, 2] positions in the scene frame
  DenseArray frame_rotation; ///< [N*H, 2, 2] local (n,t) frame -> scene frame rotation
  DenseArray frame_offset;   ///< [N*H, 2] origin of the (n,t) frame in the scene frame

  DenseArray targets;             ///< [N*H, F, 2] ground truth in the (n,t) frame, 0 where invalid
  std::vector<double> target_valid;  ///< [N*H*F]
  std::vector<int> last_valid;       ///< [N*H], last valid future index, -1 when unsupervised

  std::size_t node(std::size_t n, std::size_t t) const { return n * history + t; }
  std::size_t row(std::size_t n, std::size_t t, std::size_t k) const { return (n * history + t) * modes + k; }
  std::size_t rows() const { return agents * history * modes; }
};

/// Throws DataError when the scenario does not match the configured horizon or
/// an agent has no observed history step.
SceneInputs build_scene_inputs(const scene::Scenario& s, const ModelConfig& config);

/// Feature row of a pair relation (source seen from destination).
void pair_features(const geo::Pose& src, const geo::Pose& dst, double* out);

}  // namespace ilnet::model
