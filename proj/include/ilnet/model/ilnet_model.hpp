#pragma once

#include <cstdint>

#include "ilnet/model/encoder.hpp"
#include "ilnet/model/interaction.hpp"
#include "ilnet/model/refine.hpp"

namespace ilnet::model {

struct ForwardResult {
  Var map_emb;          ///< [G, D], invalid without lanes
  Var agent_emb;        ///< [N*H, D]
  Var initial_queries;  ///< [N*H*K, D]
  StageQueries stage;
  Var proposal_query;   ///< fused queries after the factorized rounds
  Var proposals;        ///< [N*H, K, F, 2]
  RefineOutput refine;
};

/// The full two-stage predictor. Parameters live in an external ParamStore
/// under the prefixes map., agent., query., agent_map., interaction., das.
/// and refine.
class IlnetModel {
 public:
  IlnetModel() = default;
  /// Adds freshly initialized parameters to `store` (which must not already
  /// hold them), deterministic in `seed`.
  static IlnetModel create(const ModelConfig& config, std::uint64_t seed, ParamStore& store);
  /// Binds to an existing store without adding parameters (e.g. after loading
  /// a checkpoint); throws ConfigError when a name or shape is missing.
  static IlnetModel bind(const ModelConfig& config, const ParamStore& store);

  ForwardResult forward(Tape& tape, const ParamStore& store, const SceneInputs& in) const;
  const ModelConfig& config() const { return config_; }

 private:
  ModelConfig config_;
  MapEncoder map_;
  AgentEncoder agent_;
  ModeQueries queries_;
  RelationAttention agent_map_;
  InteractionStage interaction_;
  RefineStage refine_;
};

/// Parameters owned by the anchor-selection network.
std::size_t anchor_selector_parameters(const ParamStore& store);

}  // namespace ilnet::model
