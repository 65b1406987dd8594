#include "ilnet/objective/loss.hpp"

#include "ilnet/errors.hpp"
#include "ilnet/numerics/ops.hpp"

namespace ilnet::objective {
namespace {

// WTA modes of every supervised node, joint across agents at each step t.
std::vector<std::size_t> select_modes(const DenseArray& preds, const model::SceneInputs& in, Task task) {
  const std::size_t N = in.agents, H = in.history, K = in.modes, F = in.future;
  std::vector<std::size_t> modes(N * H, 0);
  for (std::size_t t = 0; t < H; ++t) {
    std::vector<std::size_t> members;
    for (std::size_t n = 0; n < N; ++n) {
      if (in.last_valid[in.node(n, t)] >= 0) members.push_back(n);
    }
    if (members.empty()) continue;
    const std::size_t M = members.size();
    DenseArray p({M, K, F, 2}), g({M, F, 2});
    std::vector<double> valid(M * F);
    for (std::size_t i = 0; i < M; ++i) {
      const std::size_t node = in.node(members[i], t);
      std::copy_n(preds.ptr() + node * K * F * 2, K * F * 2, p.ptr() + i * K * F * 2);
      std::copy_n(in.targets.ptr() + node * F * 2, F * 2, g.ptr() + i * F * 2);
      std::copy_n(in.target_valid.begin() + static_cast<std::ptrdiff_t>(node * F), F, valid.begin() + static_cast<std::ptrdiff_t>(i * F));
    }
    const auto chosen = wta_select(p, g, valid, task);
    for (std::size_t i = 0; i < M; ++i) modes[in.node(members[i], t)] = chosen[i];
  }
  return modes;
}

}  // namespace

LossTerms compute_loss(const model::ForwardResult& out, const model::SceneInputs& in, Task task, double huber_delta) {
  const std::size_t nodes = in.agents * in.history, K = in.modes, F = in.future;
  std::size_t supervised = 0;
  for (int lv : in.last_valid) supervised += lv >= 0 ? 1 : 0;
  if (supervised == 0) throw DataError("no supervised agent step in scenario");
  const double per_pair = 1.0 / static_cast<double>(supervised);

  LossTerms terms;
  terms.pro_modes = select_modes(out.proposals.value(), in, task);
  terms.fin_modes = select_modes(out.refine.final.value(), in, task);

  DenseArray target({nodes, K, F, 2});
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      std::copy_n(in.targets.ptr() + i * F * 2, F * 2, target.ptr() + (i * K + k) * F * 2);
    }
  }
  auto regression_weights = [&](const std::vector<std::size_t>& modes) {
    std::vector<double> w(nodes * K * F * 2, 0.0);
    for (std::size_t i = 0; i < nodes; ++i) {
      if (in.last_valid[i] < 0) continue;
      double count = 0.0;
      for (std::size_t f = 0; f < F; ++f) count += in.target_valid[i * F + f];
      const double scale = per_pair / (2.0 * count);
      for (std::size_t f = 0; f < F; ++f) {
        if (in.target_valid[i * F + f] == 0.0) continue;
        const std::size_t at = ((i * K + modes[i]) * F + f) * 2;
        w[at] = scale;
        w[at + 1] = scale;
      }
    }
    return w;
  };
  terms.reg_pro = nn::huber_weighted(out.proposals, target, regression_weights(terms.pro_modes), huber_delta);
  terms.reg_fin = nn::huber_weighted(out.refine.final, target, regression_weights(terms.fin_modes), huber_delta);
  std::vector<double> row_weight(nodes, 0.0);
  for (std::size_t i = 0; i < nodes; ++i) row_weight[i] = in.last_valid[i] >= 0 ? per_pair : 0.0;
  terms.cls_fin = nn::cross_entropy_rows(out.refine.logits, terms.fin_modes, row_weight);
  terms.total = nn::add(nn::add(terms.reg_pro, terms.reg_fin), terms.cls_fin);

  terms.values.reg_pro = terms.reg_pro.value()[0];
  terms.values.reg_fin = terms.reg_fin.value()[0];
  terms.values.cls_fin = terms.cls_fin.value()[0];
  terms.values.total = terms.total.value()[0];
  terms.values.supervised = supervised;
  return terms;
}

}  // namespace ilnet::objective
