#include "ilnet/objective/wta.hpp"

#include <cmath>

#include "ilnet/errors.hpp"

namespace ilnet::objective {

const char* task_name(Task task) { return task == Task::kJoint ? "joint" : "marginal"; }

Task task_from_name(const std::string& name) {
  if (name == "joint") return Task::kJoint;
  if (name == "marginal") return Task::kMarginal;
  throw ConfigError("unknown task '" + name + "' (expected joint or marginal)");
}

std::vector<std::size_t> wta_select(const DenseArray& preds, const DenseArray& gt, const std::vector<double>& valid,
                                    Task task) {
  if (preds.rank() != 4 || preds.dim(3) != 2 || gt.rank() != 3 || gt.dim(0) != preds.dim(0) ||
      gt.dim(1) != preds.dim(2) || gt.dim(2) != 2 || valid.size() != gt.dim(0) * gt.dim(1)) {
    throw DimensionError("wta_select: predictions " + shape_str(preds.shape()) + ", ground truth " +
                         shape_str(gt.shape()) + ", mask of " + std::to_string(valid.size()));
  }
  const std::size_t N = preds.dim(0), K = preds.dim(1), F = preds.dim(2);
  std::vector<long> endpoint(N, -1);
  bool any = false;
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t f = 0; f < F; ++f) {
      if (valid[n * F + f] != 0.0) endpoint[n] = static_cast<long>(f);
    }
    any = any || endpoint[n] >= 0;
  }
  if (!any) throw DataError("wta_select: no valid ground-truth step");

  auto error = [&](std::size_t n, std::size_t k) {
    const auto f = static_cast<std::size_t>(endpoint[n]);
    const double* p = preds.ptr() + ((n * K + k) * F + f) * 2;
    const double* g = gt.ptr() + (n * F + f) * 2;
    return std::hypot(p[0] - g[0], p[1] - g[1]);
  };
  std::vector<std::size_t> out(N, 0);
  if (task == Task::kJoint) {
    std::size_t best = 0;
    double best_cost = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      double cost = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        if (endpoint[n] >= 0) cost += error(n, k);
      }
      if (k == 0 || cost < best_cost) {
        best = k;
        best_cost = cost;
      }
    }
    out.assign(N, best);
  } else {
    for (std::size_t n = 0; n < N; ++n) {
      if (endpoint[n] < 0) continue;
      double best_cost = error(n, 0);
      for (std::size_t k = 1; k < K; ++k) {
        const double c = error(n, k);
        if (c < best_cost) {
          best_cost = c;
          out[n] = k;
        }
      }
    }
  }
  return out;
}

}  // namespace ilnet::objective
