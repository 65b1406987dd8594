#pragma once

#include <cstddef>
#include <string>

#include "ilnet/numerics/attention.hpp"
#include "ilnet/numerics/param_store.hpp"
#include "ilnet/numerics/rng.hpp"
#include "ilnet/numerics/tape.hpp"

// Parameterized building blocks. Each block stores only parameter names; the
// values live in a ParamStore and are bound to a tape on every forward pass.
namespace ilnet::model {

struct Linear {
  std::string weight;
  std::string bias;  ///< empty for bias-free layers
  std::size_t in = 0;
  std::size_t out = 0;

  static Linear create(ParamStore& store, Rng& rng, const std::string& name, std::size_t in, std::size_t out,
                       bool with_bias = true);
  Var operator()(Tape& tape, const ParamStore& store, const Var& x) const;
};

struct LayerNorm {
  std::string gamma;
  std::string beta;

  static LayerNorm create(ParamStore& store, const std::string& name, std::size_t dim);
  Var operator()(Tape& tape, const ParamStore& store, const Var& x) const;
};

/// Linear -> [LayerNorm] -> GELU -> Linear
struct Mlp {
  Linear first;
  Linear second;
  LayerNorm norm;
  bool normalized = false;

  static Mlp create(ParamStore& store, Rng& rng, const std::string& name, std::size_t in, std::size_t hidden,
                    std::size_t out, bool normalized);
  Var operator()(Tape& tape, const ParamStore& store, const Var& x) const;
};

/// Pre-norm multi-head graph attention with a residual feed-forward stage.
///   h = x + mask * Wo(attn(LN(x), LN(src) (+) edges))
///   y = h + mask * FFN(LN(h))
/// Keys and values of an edge are the projections of (source + edge embedding);
/// rows without incoming edges are returned unchanged.
struct AttentionBlock {
  LayerNorm norm_query;
  LayerNorm norm_source;
  LayerNorm norm_ff;
  Linear query;
  Linear key;
  Linear value;
  Linear out;
  Linear ff_in;
  Linear ff_out;
  std::size_t heads = 1;
  bool self = false;

  static AttentionBlock create(ParamStore& store, Rng& rng, const std::string& name, std::size_t dim,
                               std::size_t heads, bool self);
  /// `source` is ignored for self-attention blocks. `edge_emb` may be an
  /// invalid Var when no edge carries features.
  Var operator()(Tape& tape, const ParamStore& store, const Var& x, const Var& source, const Var& edge_emb,
                 const AttentionEdges& edges) const;
};

}  // namespace ilnet::model
