#include "ilnet/numerics/attention.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ilnet/errors.hpp"
#include "ilnet/numerics/kernels.hpp"

namespace ilnet {

void AttentionEdges::add(std::size_t row, std::size_t node_index, std::int64_t feature_index) {
  if (row + 1 < offsets.size()) throw StateError("attention edges must be added in ascending row order");
  while (offsets.size() < row + 1) offsets.push_back(node.size());
  node.push_back(node_index);
  feature.push_back(feature_index);
}

void AttentionEdges::finish(std::size_t rows) {
  if (offsets.size() > rows + 1) throw StateError("attention edges reference rows beyond the declared count");
  while (offsets.size() < rows + 1) offsets.push_back(node.size());
  num_rows = rows;
}

std::vector<double> AttentionEdges::row_mask() const {
  std::vector<double> m(num_rows, 0.0);
  for (std::size_t r = 0; r < num_rows; ++r) m[r] = degree(r) > 0 ? 1.0 : 0.0;
  return m;
}

namespace nn {

Var graph_attention(const Var& query, const Var& key_node, const Var& val_node, const Var& key_edge,
                    const Var& val_edge, const AttentionEdges& edges, std::size_t heads) {
  const DenseArray& q = query.value();
  const std::size_t d = q.last_dim();
  const std::size_t rows = q.size() / d;
  if (heads == 0 || d % heads != 0) throw DimensionError("graph_attention: width " + std::to_string(d) + " not divisible by heads");
  if (edges.num_rows != rows || edges.offsets.size() != rows + 1) {
    throw DimensionError("graph_attention: edge list covers " + std::to_string(edges.num_rows) + " rows, query has " +
                         std::to_string(rows));
  }
  if (key_node.value().last_dim() != d || val_node.shape() != key_node.shape()) {
    throw DimensionError("graph_attention: node keys " + shape_str(key_node.shape()) + " vs query " + shape_str(q.shape()));
  }
  const bool has_edge = key_edge.valid();
  if (has_edge && (key_edge.value().last_dim() != d || val_edge.shape() != key_edge.shape())) {
    throw DimensionError("graph_attention: edge keys " + shape_str(key_edge.shape()) + " vs query " + shape_str(q.shape()));
  }
  const std::size_t num_nodes = key_node.value().size() / d;
  const std::size_t num_feat = has_edge ? key_edge.value().size() / d : 0;
  for (std::size_t e = 0; e < edges.num_edges(); ++e) {
    if (edges.node[e] >= num_nodes) throw ArgumentError("graph_attention: node index out of range");
    if (edges.feature[e] >= 0 && static_cast<std::size_t>(edges.feature[e]) >= num_feat) {
      throw ArgumentError("graph_attention: edge feature index out of range");
    }
  }

  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto& k = kernels::active();
  const double* kn = key_node.value().ptr();
  const double* vn = val_node.value().ptr();
  const double* ke = has_edge ? key_edge.value().ptr() : nullptr;
  const double* ve = has_edge ? val_edge.value().ptr() : nullptr;

  // Attention weights per (edge, head), kept for the adjoint.
  auto alpha = std::make_shared<std::vector<double>>(edges.num_edges() * heads, 0.0);
  DenseArray out(q.shape());
  std::vector<double> scores;
  std::vector<double> kv(dh);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t e0 = edges.offsets[r], e1 = edges.offsets[r + 1];
    if (e0 == e1) continue;
    scores.resize(e1 - e0);
    for (std::size_t h = 0; h < heads; ++h) {
      const double* qr = q.ptr() + r * d + h * dh;
      double mx = -INFINITY;
      for (std::size_t e = e0; e < e1; ++e) {
        double s = k.dot(qr, kn + edges.node[e] * d + h * dh, dh);
        if (edges.feature[e] >= 0) s += k.dot(qr, ke + static_cast<std::size_t>(edges.feature[e]) * d + h * dh, dh);
        s *= inv_sqrt;
        scores[e - e0] = s;
        mx = std::max(mx, s);
      }
      double z = 0.0;
      for (double& s : scores) {
        s = std::exp(s - mx);
        z += s;
      }
      double* orow = out.ptr() + r * d + h * dh;
      for (std::size_t e = e0; e < e1; ++e) {
        const double a = scores[e - e0] / z;
        (*alpha)[e * heads + h] = a;
        k.axpy(a, vn + edges.node[e] * d + h * dh, orow, dh);
        if (edges.feature[e] >= 0) k.axpy(a, ve + static_cast<std::size_t>(edges.feature[e]) * d + h * dh, orow, dh);
      }
    }
  }

  const std::size_t qi = query.id(), kni = key_node.id(), vni = val_node.id();
  const std::size_t kei = has_edge ? key_edge.id() : 0, vei = has_edge ? val_edge.id() : 0;
  std::vector<Var> inputs{query, key_node, val_node};
  if (has_edge) {
    inputs.push_back(key_edge);
    inputs.push_back(val_edge);
  }
  return query.tape().record(
      "graph_attention", std::move(out), inputs,
      [=, edges = edges](Tape& t, std::size_t self) {
        const DenseArray& g = t.grad(self);
        const auto& kt = kernels::active();
        const double* qv = t.value(qi).ptr();
        const double* knv = t.value(kni).ptr();
        const double* vnv = t.value(vni).ptr();
        const double* kev = has_edge ? t.value(kei).ptr() : nullptr;
        const double* vev = has_edge ? t.value(vei).ptr() : nullptr;
        DenseArray* dq = t.grad_target(qi);
        DenseArray* dkn = t.grad_target(kni);
        DenseArray* dvn = t.grad_target(vni);
        DenseArray* dke = has_edge ? t.grad_target(kei) : nullptr;
        DenseArray* dve = has_edge ? t.grad_target(vei) : nullptr;
        std::vector<double> dscore;
        for (std::size_t r = 0; r < rows; ++r) {
          const std::size_t e0 = edges.offsets[r], e1 = edges.offsets[r + 1];
          if (e0 == e1) continue;
          dscore.resize(e1 - e0);
          for (std::size_t h = 0; h < heads; ++h) {
            const double* gr = g.ptr() + r * d + h * dh;
            // d alpha_e = <g, v_e>; d score_e = alpha_e (d alpha_e - sum alpha d alpha)
            double weighted = 0.0;
            for (std::size_t e = e0; e < e1; ++e) {
              double da = kt.dot(gr, vnv + edges.node[e] * d + h * dh, dh);
              if (edges.feature[e] >= 0) da += kt.dot(gr, vev + static_cast<std::size_t>(edges.feature[e]) * d + h * dh, dh);
              dscore[e - e0] = da;
              weighted += (*alpha)[e * heads + h] * da;
            }
            const double* qr = qv + r * d + h * dh;
            for (std::size_t e = e0; e < e1; ++e) {
              const double a = (*alpha)[e * heads + h];
              const double ds = a * (dscore[e - e0] - weighted) * inv_sqrt;
              const std::size_t nrow = edges.node[e] * d + h * dh;
              const bool feat = edges.feature[e] >= 0;
              const std::size_t frow = feat ? static_cast<std::size_t>(edges.feature[e]) * d + h * dh : 0;
              if (dq) {
                kt.axpy(ds, knv + nrow, dq->ptr() + r * d + h * dh, dh);
                if (feat) kt.axpy(ds, kev + frow, dq->ptr() + r * d + h * dh, dh);
              }
              if (dkn) kt.axpy(ds, qr, dkn->ptr() + nrow, dh);
              if (feat && dke) kt.axpy(ds, qr, dke->ptr() + frow, dh);
              if (dvn) kt.axpy(a, gr, dvn->ptr() + nrow, dh);
              if (feat && dve) kt.axpy(a, gr, dve->ptr() + frow, dh);
            }
          }
        }
      });
}

}  // namespace nn
}  // namespace ilnet
