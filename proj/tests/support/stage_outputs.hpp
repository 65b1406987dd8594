#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "ilnet/model/ilnet_model.hpp"
#include "ilnet/model/scene_inputs.hpp"
#include "ilnet/scene/scenario.hpp"

namespace ilnet::testing {

/// Values of every stage output of one forward pass.
struct StageOutputs {
  DenseArray map_emb, agent_emb, initial, sa, ta, fa, ia, fused, query, proposals;
  DenseArray frac, anchor, delta, logits, final;

  /// Agent-major outputs, each with its leading dimension split into N equal blocks.
  std::vector<std::pair<const char*, const DenseArray*>> per_agent() const {
    return {{"agent_emb", &agent_emb}, {"initial_queries", &initial}, {"sa", &sa},       {"ta", &ta},
            {"fa", &fa},               {"ia", &ia},                   {"fused", &fused}, {"proposal_query", &query},
            {"proposals", &proposals}, {"frac", &frac},               {"anchor", &anchor}, {"delta", &delta},
            {"logits", &logits},       {"final", &final}};
  }
};

inline StageOutputs stage_outputs(const model::IlnetModel& m, const ParamStore& store, const scene::Scenario& s) {
  const model::SceneInputs in = model::build_scene_inputs(s, m.config());
  Tape tape;
  const model::ForwardResult r = m.forward(tape, store, in);
  StageOutputs o;
  if (r.map_emb.valid()) o.map_emb = r.map_emb.value();
  o.agent_emb = r.agent_emb.value();
  o.initial = r.initial_queries.value();
  o.sa = r.stage.sa.value();
  o.ta = r.stage.ta.value();
  o.fa = r.stage.fa.value();
  o.ia = r.stage.ia.value();
  o.fused = r.stage.fused.value();
  o.query = r.proposal_query.value();
  o.proposals = r.proposals.value();
  o.frac = r.refine.frac.value();
  o.anchor = r.refine.anchor.value();
  o.delta = r.refine.delta.value();
  o.logits = r.refine.logits.value();
  o.final = r.refine.final.value();
  return o;
}

/// Infinity on a shape mismatch.
inline double max_abs_diff(const DenseArray& a, const DenseArray& b) {
  if (a.shape() != b.shape()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Compares b against a with agent blocks reordered: block j of b is block perm[j] of a.
inline double permuted_diff(const DenseArray& a, const DenseArray& b, const std::vector<std::size_t>& perm) {
  if (a.shape() != b.shape()) return std::numeric_limits<double>::infinity();
  const std::size_t N = perm.size(), block = a.size() / N;
  double worst = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t e = 0; e < block; ++e) worst = std::max(worst, std::abs(b[j * block + e] - a[perm[j] * block + e]));
  }
  return worst;
}

}  // namespace ilnet::testing
