#include "ilnet/model/encoder.hpp"

#include "ilnet/numerics/ops.hpp"

namespace ilnet::model {

namespace {
std::size_t dim_of(const ModelConfig& c) { return static_cast<std::size_t>(c.dim); }
std::size_t heads_of(const ModelConfig& c) { return static_cast<std::size_t>(c.heads); }
}  // namespace

Var repeat_rows(const Var& x, std::size_t times) {
  const std::size_t rows = x.value().rows();
  std::vector<std::size_t> index(rows * times);
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i / times;
  return nn::gather_rows(nn::reshape(x, {rows, x.value().last_dim()}), index);
}

RelationAttention RelationAttention::create(ParamStore& store, Rng& rng, const std::string& name,
                                            std::size_t edge_dim, const ModelConfig& config, bool self) {
  RelationAttention r;
  if (edge_dim > 0) r.edge = Mlp::create(store, rng, name + ".edge", edge_dim, dim_of(config), dim_of(config), true);
  r.block = AttentionBlock::create(store, rng, name + ".attn", dim_of(config), heads_of(config), self);
  return r;
}

Var RelationAttention::operator()(Tape& tape, const ParamStore& store, const Var& queries, const Var& sources,
                                  const Relation& relation) const {
  if (relation.edges.num_edges() == 0) return queries;
  Var edge_emb;
  if (relation.pairs() > 0) edge_emb = edge(tape, store, tape.constant(relation.features));
  return block(tape, store, queries, sources, edge_emb, relation.edges);
}

MapEncoder MapEncoder::create(ParamStore& store, Rng& rng, const std::string& name, const ModelConfig& config) {
  const std::size_t d = dim_of(config);
  MapEncoder m;
  m.segment_init = Mlp::create(store, rng, name + ".segment", 1, d, d, true);
  m.polyline_init = Mlp::create(store, rng, name + ".polyline", 1, d, d, true);
  m.polyline_edge = Mlp::create(store, rng, name + ".polyline_edge", kPolylineEdgeDim, d, d, true);
  m.lane_edge = Mlp::create(store, rng, name + ".lane_edge", kLaneEdgeDim, d, d, true);
  m.polyline_attention = AttentionBlock::create(store, rng, name + ".polyline_attn", d, heads_of(config), false);
  m.lane_attention = AttentionBlock::create(store, rng, name + ".lane_attn", d, heads_of(config), true);
  return m;
}

Var MapEncoder::operator()(Tape& tape, const ParamStore& store, const SceneInputs& in) const {
  if (in.segments == 0) return {};
  Var seg = segment_init(tape, store, tape.constant(in.segment_features));
  const Var poly = polyline_init(tape, store, tape.constant(in.polyline_features));
  const Var poly_edges = polyline_edge(tape, store, tape.constant(in.polyline_to_segment.features));
  seg = polyline_attention(tape, store, seg, poly, poly_edges, in.polyline_to_segment.edges);
  if (in.lane_links.pairs() > 0) {
    const Var link_edges = lane_edge(tape, store, tape.constant(in.lane_links.features));
    seg = lane_attention(tape, store, seg, seg, link_edges, in.lane_links.edges);
  }
  return seg;
}

AgentEncoder AgentEncoder::create(ParamStore& store, Rng& rng, const std::string& name, const ModelConfig& config) {
  const std::size_t d = dim_of(config);
  AgentEncoder a;
  a.node = Mlp::create(store, rng, name + ".node", kAgentFeatureDim, d, d, true);
  a.mask_embedding = name + ".mask";
  store.add_uniform(a.mask_embedding, {d}, d, rng);
  return a;
}

Var AgentEncoder::operator()(Tape& tape, const ParamStore& store, const SceneInputs& in) const {
  const Var emb = node(tape, store, tape.constant(in.agent_features));
  std::vector<double> hidden(in.observed.size());
  for (std::size_t i = 0; i < hidden.size(); ++i) hidden[i] = 1.0 - in.observed[i];
  const std::size_t d = emb.value().last_dim();
  // Observed rows keep the MLP output; the rest become exactly the mask vector.
  const Var mask_rows = nn::scale_rows(repeat_rows(tape.param(store, mask_embedding), in.observed.size()), hidden);
  return nn::add(nn::scale_rows(emb, in.observed), nn::reshape(mask_rows, {in.observed.size(), d}));
}

ModeQueries ModeQueries::create(ParamStore& store, Rng& rng, const std::string& name, const ModelConfig& config) {
  const std::size_t d = dim_of(config);
  ModeQueries q;
  q.mode_embedding = name + ".modes";
  store.add_uniform(q.mode_embedding, {static_cast<std::size_t>(config.modes), d}, d, rng);
  q.projection = Linear::create(store, rng, name + ".proj", d, d);
  return q;
}

Var ModeQueries::operator()(Tape& tape, const ParamStore& store, const SceneInputs& in, const Var& agent_emb) const {
  const std::size_t nodes = in.agents * in.history;
  const Var per_node = repeat_rows(projection(tape, store, agent_emb), in.modes);
  std::vector<std::size_t> mode_index(nodes * in.modes);
  for (std::size_t i = 0; i < mode_index.size(); ++i) mode_index[i] = i % in.modes;
  return nn::add(per_node, nn::gather_rows(tape.param(store, mode_embedding), mode_index));
}

}  // namespace ilnet::model
