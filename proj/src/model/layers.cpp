#include "ilnet/model/layers.hpp"

#include <algorithm>

#include "ilnet/numerics/ops.hpp"

namespace ilnet::model {

Linear Linear::create(ParamStore& store, Rng& rng, const std::string& name, std::size_t in, std::size_t out,
                      bool with_bias) {
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = name + ".w";
  store.add_uniform(l.weight, {in, out}, in, rng);
  if (with_bias) {
    l.bias = name + ".b";
    store.add_uniform(l.bias, {out}, in, rng);
  }
  return l;
}

Var Linear::operator()(Tape& tape, const ParamStore& store, const Var& x) const {
  if (bias.empty()) return nn::linear(x, tape.param(store, weight));
  return nn::linear(x, tape.param(store, weight), tape.param(store, bias));
}

LayerNorm LayerNorm::create(ParamStore& store, const std::string& name, std::size_t dim) {
  LayerNorm n;
  n.gamma = name + ".gamma";
  n.beta = name + ".beta";
  store.add(n.gamma, {dim}).fill(1.0);
  store.add(n.beta, {dim});
  return n;
}

Var LayerNorm::operator()(Tape& tape, const ParamStore& store, const Var& x) const {
  return nn::layer_norm(x, tape.param(store, gamma), tape.param(store, beta));
}

Mlp Mlp::create(ParamStore& store, Rng& rng, const std::string& name, std::size_t in, std::size_t hidden,
                std::size_t out, bool normalized) {
  Mlp m;
  m.first = Linear::create(store, rng, name + ".0", in, hidden);
  if (normalized) m.norm = LayerNorm::create(store, name + ".norm", hidden);
  m.second = Linear::create(store, rng, name + ".1", hidden, out);
  m.normalized = normalized;
  return m;
}

Var Mlp::operator()(Tape& tape, const ParamStore& store, const Var& x) const {
  Var h = first(tape, store, x);
  if (normalized) h = norm(tape, store, h);
  return second(tape, store, nn::gelu(h));
}

AttentionBlock AttentionBlock::create(ParamStore& store, Rng& rng, const std::string& name, std::size_t dim,
                                      std::size_t heads, bool self) {
  AttentionBlock b;
  b.heads = heads;
  b.self = self;
  b.norm_query = LayerNorm::create(store, name + ".norm_q", dim);
  if (!self) b.norm_source = LayerNorm::create(store, name + ".norm_src", dim);
  b.norm_ff = LayerNorm::create(store, name + ".norm_ff", dim);
  b.query = Linear::create(store, rng, name + ".q", dim, dim);
  b.key = Linear::create(store, rng, name + ".k", dim, dim);
  b.value = Linear::create(store, rng, name + ".v", dim, dim);
  b.out = Linear::create(store, rng, name + ".o", dim, dim);
  b.ff_in = Linear::create(store, rng, name + ".ff0", dim, 2 * dim);
  b.ff_out = Linear::create(store, rng, name + ".ff1", 2 * dim, dim);
  return b;
}

Var AttentionBlock::operator()(Tape& tape, const ParamStore& store, const Var& x, const Var& source,
                               const Var& edge_emb, const AttentionEdges& edges) const {
  if (edges.num_edges() == 0) return x;
  const Var xn = norm_query(tape, store, x);
  const Var sn = self ? xn : norm_source(tape, store, source);
  const Var q = query(tape, store, xn);
  const Var k = key(tape, store, sn);
  const Var v = value(tape, store, sn);
  Var ke, ve;
  if (edge_emb.valid()) {
    // Edge embeddings share the key/value projections but not their bias.
    ke = nn::linear(edge_emb, tape.param(store, key.weight));
    ve = nn::linear(edge_emb, tape.param(store, value.weight));
  }
  const Var attn = nn::graph_attention(q, k, v, ke, ve, edges, heads);
  const std::vector<double> mask = edges.row_mask();
  const bool full = std::all_of(mask.begin(), mask.end(), [](double m) { return m != 0.0; });
  auto masked = [&](const Var& update) { return full ? update : nn::scale_rows(update, mask); };
  const Var h = nn::add(x, masked(out(tape, store, attn)));
  const Var ff = ff_out(tape, store, nn::gelu(ff_in(tape, store, norm_ff(tape, store, h))));
  return nn::add(h, masked(ff));
}

}  // namespace ilnet::model
