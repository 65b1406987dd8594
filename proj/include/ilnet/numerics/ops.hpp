#pragma once

#include <cstddef>
#include <vector>

#include "ilnet/numerics/tape.hpp"

// Differentiable primitives. Every function records one node on the inputs'
// tape and throws DimensionError (naming both shapes) on incompatible inputs.
namespace ilnet::nn {

/// y[.., j] = sum_i x[.., i] w[i, j] + b[j]
Var linear(const Var& x, const Var& w, const Var& b);
Var linear(const Var& x, const Var& w);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);

/// x viewed as [rows, C] plus row[C] broadcast over rows.
Var add_row_vector(const Var& x, const Var& row);
/// x viewed as [A, B] plus y[A] broadcast along B.
Var add_outer_broadcast(const Var& x, const Var& y);
/// x viewed as [R, C], row r multiplied by the constant weights[r].
Var scale_rows(const Var& x, std::vector<double> weights);

Var gelu(const Var& x);
Var sigmoid(const Var& x);

/// Normalizes the innermost axis, then applies gamma/beta of that size.
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
/// Max-subtracted softmax along `axis`.
Var softmax(const Var& x, std::size_t axis);

Var sum(const Var& x);
Var reshape(const Var& x, Shape shape);
/// out.shape[i] = x.shape[axes[i]]
Var permute(const Var& x, const std::vector<std::size_t>& axes);
/// Concatenation along the innermost axis; leading shapes must agree.
Var concat_last(const Var& a, const Var& b);
/// Rows of x (viewed as [R, rest...]) at the given first-axis indices.
Var gather_rows(const Var& x, const std::vector<std::size_t>& rows);

/// Valid cross-correlation. x is [C, L, W] or [B, C, L, W]; w is
/// [O, C, kl, kw]; b is [O]. Output [(B,) O, L-kl+1, W-kw+1].
Var conv2d(const Var& x, const Var& w, const Var& b);

/// Mean element-wise Huber loss: 0.5 r^2 if |r| <= delta else delta (|r| - 0.5 delta).
Var huber_loss(const Var& pred, const Var& target, double delta);
/// sum_i weights[i] * huber(pred[i] - target[i]); target is constant.
Var huber_weighted(const Var& pred, const DenseArray& target, const std::vector<double>& weights, double delta);

/// -log softmax(logits)[target] for a [K] logit vector, evaluated in log space.
Var cross_entropy(const Var& logits, std::size_t target);
/// sum_r weights[r] * CE(logits[r, :], targets[r]) over rows of [R, K].
Var cross_entropy_rows(const Var& logits, const std::vector<std::size_t>& targets,
                       const std::vector<double>& weights);

/// Smooth polar encoding of planar points [.., 2] -> [.., 3]:
/// (dist_scale * r, x / r, y / r) with r = sqrt(x^2 + y^2 + eps^2).
Var smooth_polar(const Var& xy, double eps, double dist_scale);

double gelu_value(double x);

}  // namespace ilnet::nn
