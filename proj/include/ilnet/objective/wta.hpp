#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ilnet/numerics/dense_array.hpp"

namespace ilnet::objective {

enum class Task { kJoint, kMarginal };

const char* task_name(Task task);
Task task_from_name(const std::string& name);

/// Winner-takes-all mode choice from endpoint errors. preds [N, K, F, 2],
/// gt [N, F, 2], valid [N * F] (1 = step labeled). Each agent's endpoint is
/// its last valid step; agents without one are ignored (index 0 in marginal
/// mode). Joint: one mode minimizing the summed endpoint error, repeated N
/// times. Marginal: per-agent minimum. Ties go to the lowest mode. Throws
/// DataError when no step is valid.
std::vector<std::size_t> wta_select(const DenseArray& preds, const DenseArray& gt, const std::vector<double>& valid,
                                    Task task);

}  // namespace ilnet::objective
