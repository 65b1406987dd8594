#pragma once

#include <optional>
#include <string>

#include "ilnet/model/encoder.hpp"
#include "ilnet/model/interaction.hpp"

namespace ilnet::model {

inline constexpr double kPolarEps = 1e-3;
inline constexpr double kPolarScale = 0.1;

/// y[r, m] = rotation[r] * x[r, m] + offset[r] for x [R, M, 2], rotation
/// [R, 2, 2] and offset [R, 2] (both constant).
Var rigid_rows(const Var& x, const DenseArray& rotation, const DenseArray& offset);

/// Linear interpolation along each polyline of points [R, F, 2] at fractional
/// index frac [R] in [0, F-1]. Output [R, 2]; differentiable in both inputs.
Var interpolate_along(const Var& points, const Var& frac);

/// Anchor-selection network: conv heads over history and proposal embeddings
/// in the scene frame, producing a fractional index per (n, t, k).
struct AnchorSelector {
  Mlp history_embed;
  Mlp proposal_embed;
  std::string conv_time_w, conv_time_b;  ///< channels = history steps
  std::string conv_mode_w, conv_mode_b;  ///< channels = modes
  Mlp head;
  std::size_t kernel = 0;

  static AnchorSelector create(ParamStore& store, Rng& rng, const std::string& name, const ModelConfig& config);
  /// Sigmoid output [N*H, K] in [0, 1].
  Var operator()(Tape& tape, const ParamStore& store, const SceneInputs& in, const Var& proposals) const;
};

struct RefineOutput {
  Var frac;     ///< [N*H, K] in [0, F-1]
  Var anchor;   ///< [N*H, K, 2] local frame of (n, t)
  Var query;    ///< [N*H*K, D]
  Var delta;    ///< [N*H, K, F, 2]
  Var logits;   ///< [N*H, K]
  Var final;    ///< proposals + delta
};

struct RefineStage {
  std::optional<AnchorSelector> selector;  ///< empty for fixed midpoint anchors
  Mlp point_embed;
  RelationAttention map_attention;
  FactorizedRound round;
  Mlp delta_head;
  Mlp logit_head;
  double refine_radius = 20.0;

  static RefineStage create(ParamStore& store, Rng& rng, const std::string& name, const ModelConfig& config);
  RefineOutput operator()(Tape& tape, const ParamStore& store, const SceneInputs& in, const Var& map_emb,
                          const Var& proposals, const Var& proposal_query) const;
};

}  // namespace ilnet::model
