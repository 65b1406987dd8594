#include "ilnet/model/interaction.hpp"

#include "ilnet/numerics/ops.hpp"

namespace ilnet::model {

FactorizedRound FactorizedRound::create(ParamStore& store, Rng& rng, const std::string& name,
                                        const ModelConfig& config) {
  FactorizedRound r;
  r.agents = RelationAttention::create(store, rng, name + ".agent", kPairFeatureDim, config, true);
  r.history = RelationAttention::create(store, rng, name + ".history", kTemporalFeatureDim, config, true);
  r.modes = RelationAttention::create(store, rng, name + ".mode", 0, config, true);
  return r;
}

Var FactorizedRound::operator()(Tape& tape, const ParamStore& store, const SceneInputs& in,
                                const Var& queries) const {
  Var q = agents(tape, store, queries, queries, in.fact_agents);
  q = history(tape, store, q, q, in.fact_history);
  return modes(tape, store, q, q, in.fact_modes);
}

InteractionStage InteractionStage::create(ParamStore& store, Rng& rng, const std::string& name,
                                          const ModelConfig& config) {
  InteractionStage s;
  s.order = config.il_order;
  s.temporal = RelationAttention::create(store, rng, name + ".ta", kTemporalFeatureDim, config, false);
  if (!config.disable_fa) s.future = RelationAttention::create(store, rng, name + ".fa", kPairFeatureDim, config, false);
  if (!config.disable_ha) s.past = RelationAttention::create(store, rng, name + ".ha", kPairFeatureDim, config, false);
  for (int i = 0; i < config.recurrences; ++i) {
    s.rounds.push_back(FactorizedRound::create(store, rng, name + ".factorized" + std::to_string(i), config));
  }
  const auto d = static_cast<std::size_t>(config.dim);
  s.decoder = Mlp::create(store, rng, name + ".decoder", d, d, static_cast<std::size_t>(config.future) * 2, true);
  return s;
}

void InteractionStage::encode(Tape& tape, const ParamStore& store, const SceneInputs& in, const Var& agent_emb,
                              StageQueries& stage) const {
  stage.ta = temporal(tape, store, stage.sa, agent_emb, in.temporal);
  auto apply_future = [&](const Var& q) { return future ? (*future)(tape, store, q, agent_emb, in.future_agents) : q; };
  auto apply_past = [&](const Var& q) { return past ? (*past)(tape, store, q, agent_emb, in.past_agents) : q; };
  if (!future && !past) {
    stage.fa = stage.ta;
    stage.ia = nn::scale(stage.ta, 0.0);
  } else if (order == IlOrder::kInverse) {
    stage.fa = apply_future(stage.ta);
    stage.ia = apply_past(stage.fa);
  } else {
    stage.fa = apply_future(apply_past(stage.ta));
    stage.ia = stage.fa;
  }
  stage.fused = nn::add(nn::add(stage.sa, stage.ta), stage.ia);
}

Var InteractionStage::factorize(Tape& tape, const ParamStore& store, const SceneInputs& in, const Var& fused) const {
  Var q = fused;
  for (const auto& round : rounds) q = round(tape, store, in, q);
  return q;
}

Var InteractionStage::decode(Tape& tape, const ParamStore& store, const SceneInputs& in, const Var& queries) const {
  return nn::reshape(decoder(tape, store, queries), {in.agents * in.history, in.modes, in.future, 2});
}

}  // namespace ilnet::model
