#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "ilnet/numerics/param_store.hpp"
#include "ilnet/numerics/rng.hpp"
#include "ilnet/numerics/tape.hpp"

namespace ilnet::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  ///< "name[index]"
  double max_abs_grad = 0.0;
};

/// Compares reverse-mode gradients of `loss_fn` against central differences
/// for every entry of every parameter in `store`. order 2 is the three-point
/// stencil, order 4 the five-point one (allows larger steps on deep graphs).
/// Only parameters whose name starts with `prefix` are probed.
/// rel = |a - n| / max(|a|, |n|, floor)
inline GradCheckResult check_gradients(ParamStore& store, const std::function<Var(Tape&)>& loss_fn,
                                       double step = 1e-5, double floor = 1e-8, int order = 2,
                                       const std::string& prefix = "") {
  store.zero_grad();
  {
    Tape tape;
    Var loss = loss_fn(tape);
    tape.backward(loss, store);
  }
  auto eval = [&]() {
    Tape tape;
    return loss_fn(tape).value().item();
  };
  GradCheckResult res;
  for (auto& e : store.entries()) {
    if (!e.name.starts_with(prefix)) continue;
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double orig = e.value[i];
      auto at = [&](double offset) {
        e.value[i] = orig + offset;
        const double v = eval();
        e.value[i] = orig;
        return v;
      };
      const double near = at(step) - at(-step);
      const double numeric = order == 4 ? (8.0 * near - (at(2.0 * step) - at(-2.0 * step))) / (12.0 * step)
                                        : near / (2.0 * step);
      const double analytic = e.grad[i];
      const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
      res.max_abs_grad = std::max(res.max_abs_grad, std::abs(analytic));
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst = e.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

inline DenseArray random_array(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  DenseArray a(shape);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(lo, hi);
  return a;
}

}  // namespace ilnet::testing
