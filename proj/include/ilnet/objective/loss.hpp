#pragma once

#include <vector>

#include "ilnet/model/ilnet_model.hpp"
#include "ilnet/objective/wta.hpp"

namespace ilnet::objective {

struct LossBreakdown {
  double reg_pro = 0.0;
  double reg_fin = 0.0;
  double cls_fin = 0.0;
  double total = 0.0;
  std::size_t supervised = 0;  ///< (n, t) pairs with at least one labeled target step
};

struct LossTerms {
  Var total;
  Var reg_pro;
  Var reg_fin;
  Var cls_fin;
  LossBreakdown values;
  std::vector<std::size_t> pro_modes;  ///< WTA mode per (n, t) node
  std::vector<std::size_t> fin_modes;
};

/// Huber regression on the WTA mode of proposals and finals plus
/// cross-entropy of the logits against the final WTA mode, averaged over
/// supervised (n, t) pairs. Regression terms average over each pair's labeled
/// coordinates. Throws DataError when nothing is supervised.
LossTerms compute_loss(const model::ForwardResult& out, const model::SceneInputs& in, Task task, double huber_delta);

}  // namespace ilnet::objective
