#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ilnet/numerics/tape.hpp"

namespace ilnet {

/// Incoming edges per query row in CSR form. Edge e of row r pairs key/value
/// node `node[e]` with optional edge-feature row `feature[e]` (-1 for none).
struct AttentionEdges {
  std::size_t num_rows = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> node;
  std::vector<std::int64_t> feature;

  /// Edges must be appended row by row in ascending row order.
  void add(std::size_t row, std::size_t node_index, std::int64_t feature_index = -1);
  /// Closes every row up to `rows` (rows without edges stay empty).
  void finish(std::size_t rows);

  std::size_t num_edges() const { return node.size(); }
  std::size_t degree(std::size_t row) const { return offsets[row + 1] - offsets[row]; }
  /// 1 for rows with at least one incoming edge, 0 otherwise.
  std::vector<double> row_mask() const;
};

namespace nn {

/// Multi-head graph attention. For each query row r and head h:
///   score_e = <q[r,h], key_node[node_e,h] + key_edge[feat_e,h]> / sqrt(dh)
///   out[r,h] = sum_e softmax_e(score) * (val_node[node_e,h] + val_edge[feat_e,h])
/// Rows without edges produce zeros. key_edge/val_edge may be empty Vars when
/// no edge carries a feature row.
Var graph_attention(const Var& query, const Var& key_node, const Var& val_node, const Var& key_edge,
                    const Var& val_edge, const AttentionEdges& edges, std::size_t heads);

}  // namespace nn
}  // namespace ilnet
