#pragma once

#include <optional>
#include <string>

#include "ilnet/model/encoder.hpp"

namespace ilnet::model {

/// One round of agent, historical-prediction and mode self-attention over
/// rows (n, t, k).
struct FactorizedRound {
  RelationAttention agents;
  RelationAttention history;
  RelationAttention modes;

  static FactorizedRound create(ParamStore& store, Rng& rng, const std::string& name, const ModelConfig& config);
  Var operator()(Tape& tape, const ParamStore& store, const SceneInputs& in, const Var& queries) const;
};

struct StageQueries {
  Var sa;  ///< after agent-map attention
  Var ta;  ///< ego temporal
  Var fa;  ///< agent future; equals its input when disabled
  Var ia;  ///< inverse-learning output fused into the query
  Var fused;
};

/// Temporal and inverse-learning attention, fusion, factorized rounds and
/// proposal decoding.
struct InteractionStage {
  RelationAttention temporal;
  std::optional<RelationAttention> future;
  std::optional<RelationAttention> past;
  std::vector<FactorizedRound> rounds;
  Mlp decoder;
  IlOrder order = IlOrder::kInverse;

  static InteractionStage create(ParamStore& store, Rng& rng, const std::string& name, const ModelConfig& config);
  /// Fills everything but `sa` in `stage` from `stage.sa`.
  void encode(Tape& tape, const ParamStore& store, const SceneInputs& in, const Var& agent_emb,
              StageQueries& stage) const;
  /// Factorized rounds over the fused queries.
  Var factorize(Tape& tape, const ParamStore& store, const SceneInputs& in, const Var& fused) const;
  /// [N*H, K, F, 2] local-frame offsets from each (n, t) pose.
  Var decode(Tape& tape, const ParamStore& store, const SceneInputs& in, const Var& queries) const;
};

}  // namespace ilnet::model
