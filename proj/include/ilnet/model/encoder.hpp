#pragma once

#include <string>

#include "ilnet/model/config.hpp"
#include "ilnet/model/layers.hpp"
#include "ilnet/model/scene_inputs.hpp"

namespace ilnet::model {

/// Polyline -> segment cross-attention followed by segment self-attention over
/// lane links. Output [G, D]; an invalid Var for maps without segments.
struct MapEncoder {
  Mlp segment_init;
  Mlp polyline_init;
  Mlp polyline_edge;
  Mlp lane_edge;
  AttentionBlock polyline_attention;
  AttentionBlock lane_attention;

  static MapEncoder create(ParamStore& store, Rng& rng, const std::string& name, const ModelConfig& config);
  Var operator()(Tape& tape, const ParamStore& store, const SceneInputs& in) const;
};

/// Per agent-time node embedding; unobserved steps take a learned mask vector.
/// Output [N*H, D].
struct AgentEncoder {
  Mlp node;
  std::string mask_embedding;

  static AgentEncoder create(ParamStore& store, Rng& rng, const std::string& name, const ModelConfig& config);
  Var operator()(Tape& tape, const ParamStore& store, const SceneInputs& in) const;
};

/// Initial mode queries: a learned vector per mode plus a projection of the
/// agent embedding at (n, t). Output [N*H*K, D].
struct ModeQueries {
  std::string mode_embedding;
  Linear projection;

  static ModeQueries create(ParamStore& store, Rng& rng, const std::string& name, const ModelConfig& config);
  Var operator()(Tape& tape, const ParamStore& store, const SceneInputs& in, const Var& agent_emb) const;
};

/// Cross-attention of queries over their relation's sources with embedded
/// edge features. Rows without sources pass through unchanged.
struct RelationAttention {
  Mlp edge;
  AttentionBlock block;

  static RelationAttention create(ParamStore& store, Rng& rng, const std::string& name, std::size_t edge_dim,
                                  const ModelConfig& config, bool self);
  Var operator()(Tape& tape, const ParamStore& store, const Var& queries, const Var& sources,
                 const Relation& relation) const;
};

/// Repeats each row of x (viewed as [R, C]) `times` times: [R * times, C].
Var repeat_rows(const Var& x, std::size_t times);

}  // namespace ilnet::model
