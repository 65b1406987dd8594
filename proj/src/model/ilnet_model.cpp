#include "ilnet/model/ilnet_model.hpp"

#include "ilnet/errors.hpp"

namespace ilnet::model {

IlnetModel IlnetModel::create(const ModelConfig& config, std::uint64_t seed, ParamStore& store) {
  config.validate();
  Rng rng(derive_seed(seed, 0));
  IlnetModel m;
  m.config_ = config;
  m.map_ = MapEncoder::create(store, rng, "map", config);
  m.agent_ = AgentEncoder::create(store, rng, "agent", config);
  m.queries_ = ModeQueries::create(store, rng, "query", config);
  m.agent_map_ = RelationAttention::create(store, rng, "agent_map", kPairFeatureDim, config, false);
  m.interaction_ = InteractionStage::create(store, rng, "interaction", config);
  m.refine_ = RefineStage::create(store, rng, "refine", config);
  return m;
}

IlnetModel IlnetModel::bind(const ModelConfig& config, const ParamStore& store) {
  // Build the layout in a scratch store and check the real one matches it.
  ParamStore layout;
  IlnetModel m = create(config, 0, layout);
  if (layout.size() != store.size()) {
    throw ConfigError("parameter store holds " + std::to_string(store.size()) + " entries, model expects " +
                      std::to_string(layout.size()));
  }
  for (const auto& e : layout.entries()) {
    if (!store.contains(e.name)) throw ConfigError("missing parameter " + e.name);
    if (store.value(e.name).shape() != e.value.shape()) {
      throw ConfigError("parameter " + e.name + " has shape " + shape_str(store.value(e.name).shape()) +
                        ", model expects " + shape_str(e.value.shape()));
    }
  }
  return m;
}

ForwardResult IlnetModel::forward(Tape& tape, const ParamStore& store, const SceneInputs& in) const {
  ForwardResult r;
  r.map_emb = map_(tape, store, in);
  r.agent_emb = agent_(tape, store, in);
  r.initial_queries = queries_(tape, store, in, r.agent_emb);
  r.stage.sa = r.map_emb.valid() ? agent_map_(tape, store, r.initial_queries, r.map_emb, in.agent_map)
                                 : r.initial_queries;
  interaction_.encode(tape, store, in, r.agent_emb, r.stage);
  r.proposal_query = interaction_.factorize(tape, store, in, r.stage.fused);
  r.proposals = interaction_.decode(tape, store, in, r.proposal_query);
  r.refine = refine_(tape, store, in, r.map_emb, r.proposals, r.proposal_query);
  return r;
}

std::size_t anchor_selector_parameters(const ParamStore& store) { return store.parameter_count("das."); }

}  // namespace ilnet::model
