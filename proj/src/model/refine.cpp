#include "ilnet/model/refine.hpp"

#include <algorithm>
#include <cmath>

#include "ilnet/errors.hpp"
#include "ilnet/numerics/ops.hpp"

namespace ilnet::model {

Var rigid_rows(const Var& x, const DenseArray& rotation, const DenseArray& offset) {
  const DenseArray& v = x.value();
  const std::size_t rows = rotation.size() / 4;
  if (v.rank() != 3 || v.dim(0) != rows || v.dim(2) != 2 || offset.size() != 2 * rows) {
    throw DimensionError("rigid_rows: points " + shape_str(v.shape()) + " vs rotation " + shape_str(rotation.shape()) +
                         " and offset " + shape_str(offset.shape()));
  }
  const std::size_t m = v.dim(1);
  DenseArray y(v.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* rot = rotation.ptr() + 4 * r;
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t i = 2 * (r * m + j);
      y[i] = rot[0] * v[i] + rot[1] * v[i + 1] + offset[2 * r];
      y[i + 1] = rot[2] * v[i] + rot[3] * v[i + 1] + offset[2 * r + 1];
    }
  }
  const std::size_t xi = x.id();
  return x.tape().record("rigid_rows", std::move(y), {x}, [xi, rows, m, rotation](Tape& t, std::size_t self) {
    const DenseArray& g = t.grad(self);
    DenseArray& d = t.grad(xi);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* rot = rotation.ptr() + 4 * r;
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t i = 2 * (r * m + j);
        d[i] += rot[0] * g[i] + rot[2] * g[i + 1];
        d[i + 1] += rot[1] * g[i] + rot[3] * g[i + 1];
      }
    }
  });
}

Var interpolate_along(const Var& points, const Var& frac) {
  const DenseArray& p = points.value();
  const DenseArray& f = frac.value();
  if (p.rank() != 3 || p.dim(2) != 2 || f.size() != p.dim(0) || p.dim(1) < 1) {
    throw DimensionError("interpolate_along: points " + shape_str(p.shape()) + " vs index " + shape_str(f.shape()));
  }
  const std::size_t rows = p.dim(0), steps = p.dim(1);
  std::vector<std::size_t> lower(rows);
  std::vector<double> weight(rows);
  DenseArray y({rows, 2});
  for (std::size_t r = 0; r < rows; ++r) {
    const double x = std::clamp(f[r], 0.0, static_cast<double>(steps - 1));
    const std::size_t i0 = steps < 2 ? 0 : std::min(static_cast<std::size_t>(std::floor(x)), steps - 2);
    const double w = steps < 2 ? 0.0 : x - static_cast<double>(i0);
    lower[r] = i0;
    weight[r] = w;
    const double* a = p.ptr() + 2 * (r * steps + i0);
    const double* b = steps < 2 ? a : a + 2;
    y[2 * r] = (1.0 - w) * a[0] + w * b[0];
    y[2 * r + 1] = (1.0 - w) * a[1] + w * b[1];
  }
  const std::size_t pi = points.id(), fi = frac.id();
  return points.tape().record(
      "interpolate_along", std::move(y), {points, frac},
      [pi, fi, rows, steps, lower = std::move(lower), weight = std::move(weight)](Tape& t, std::size_t self) {
        const DenseArray& g = t.grad(self);
        const DenseArray& p = t.value(pi);
        DenseArray* dp = t.grad_target(pi);
        DenseArray* df = t.grad_target(fi);
        for (std::size_t r = 0; r < rows; ++r) {
          if (steps < 2) {
            if (dp) {
              (*dp)[2 * r] += g[2 * r];
              (*dp)[2 * r + 1] += g[2 * r + 1];
            }
            continue;
          }
          const std::size_t a = 2 * (r * steps + lower[r]), b = a + 2;
          const double w = weight[r];
          if (dp) {
            (*dp)[a] += (1.0 - w) * g[2 * r];
            (*dp)[a + 1] += (1.0 - w) * g[2 * r + 1];
            (*dp)[b] += w * g[2 * r];
            (*dp)[b + 1] += w * g[2 * r + 1];
          }
          if (df) (*df)[r] += g[2 * r] * (p[b] - p[a]) + g[2 * r + 1] * (p[b + 1] - p[a + 1]);
        }
      });
}

AnchorSelector AnchorSelector::create(ParamStore& store, Rng& rng, const std::string& name,
                                      const ModelConfig& config) {
  AnchorSelector s;
  const auto h = static_cast<std::size_t>(config.history), k = static_cast<std::size_t>(config.modes);
  s.kernel = static_cast<std::size_t>(config.das_kernel());
  s.history_embed = Mlp::create(store, rng, name + ".history", 3, 8, 1, false);
  s.proposal_embed = Mlp::create(store, rng, name + ".proposal", 3, 8, 1, false);
  s.conv_time_w = name + ".conv_time.w";
  s.conv_time_b = name + ".conv_time.b";
  s.conv_mode_w = name + ".conv_mode.w";
  s.conv_mode_b = name + ".conv_mode.b";
  store.add_uniform(s.conv_time_w, {h, h, s.kernel, 1}, h * s.kernel, rng);
  store.add_uniform(s.conv_time_b, {h}, h * s.kernel, rng);
  store.add_uniform(s.conv_mode_w, {k, k, s.kernel, 1}, k * s.kernel, rng);
  store.add_uniform(s.conv_mode_b, {k}, k * s.kernel, rng);
  const std::size_t span = static_cast<std::size_t>(config.future) - s.kernel + 1;
  s.head = Mlp::create(store, rng, name + ".head", 2 * span, 16, 1, false);
  return s;
}

Var AnchorSelector::operator()(Tape& tape, const ParamStore& store, const SceneInputs& in,
                               const Var& proposals) const {
  const std::size_t N = in.agents, H = in.history, K = in.modes, F = in.future;
  // Proposals and history in the scene frame, as smooth polar coordinates.
  const Var scene_pts = rigid_rows(nn::reshape(proposals, {N * H, K * F, 2}), in.frame_rotation, in.frame_offset);
  const Var pro = proposal_embed(tape, store, nn::smooth_polar(scene_pts, kPolarEps, kPolarScale));
  const Var his = history_embed(
      tape, store, nn::smooth_polar(tape.constant(in.history_scene), kPolarEps, kPolarScale));
  const Var embedded =
      nn::reshape(nn::add(nn::reshape(pro, {N * H * K * F, 1}), repeat_rows(his, K * F)), {N, H, K, F});

  const Var by_time = nn::conv2d(nn::permute(embedded, {0, 1, 3, 2}), tape.param(store, conv_time_w),
                                 tape.param(store, conv_time_b));  // [N, H, L, K]
  const Var by_mode = nn::conv2d(nn::permute(embedded, {0, 2, 3, 1}), tape.param(store, conv_mode_w),
                                 tape.param(store, conv_mode_b));  // [N, K, L, H]
  const Var joined = nn::concat_last(nn::permute(by_time, {0, 1, 3, 2}), nn::permute(by_mode, {0, 3, 1, 2}));
  return nn::reshape(nn::sigmoid(head(tape, store, joined)), {N * H, K});
}

RefineStage RefineStage::create(ParamStore& store, Rng& rng, const std::string& name, const ModelConfig& config) {
  RefineStage s;
  const auto d = static_cast<std::size_t>(config.dim), f = static_cast<std::size_t>(config.future);
  if (config.anchor_mode == AnchorMode::kDynamic) s.selector = AnchorSelector::create(store, rng, "das", config);
  s.point_embed = Mlp::create(store, rng, name + ".points", 3 * f, d, d, true);
  s.map_attention = RelationAttention::create(store, rng, name + ".map", kPairFeatureDim, config, false);
  s.round = FactorizedRound::create(store, rng, name + ".factorized", config);
  s.delta_head = Mlp::create(store, rng, name + ".delta", d, d, 2 * f, true);
  s.logit_head = Mlp::create(store, rng, name + ".logit", d, d, 1, true);
  s.refine_radius = config.refine_radius;
  return s;
}

RefineOutput RefineStage::operator()(Tape& tape, const ParamStore& store, const SceneInputs& in, const Var& map_emb,
                                     const Var& proposals, const Var& proposal_query) const {
  const std::size_t N = in.agents, H = in.history, K = in.modes, F = in.future;
  const std::size_t R = N * H * K;
  RefineOutput out;
  const double last = static_cast<double>(F - 1);
  if (selector) {
    out.frac = nn::scale((*selector)(tape, store, in, proposals), last);
  } else {
    out.frac = tape.constant(DenseArray({N * H, K}, last / 2.0));
  }
  const Var points = nn::reshape(proposals, {R, F, 2});
  const Var anchor = interpolate_along(points, nn::reshape(out.frac, {R}));
  out.anchor = nn::reshape(anchor, {N * H, K, 2});

  // Anchor-relative polar encoding of the proposal.
  const Var rel = nn::sub(points, nn::reshape(repeat_rows(anchor, F), {R, F, 2}));
  const Var shape = nn::reshape(nn::smooth_polar(rel, kPolarEps, kPolarScale), {R, 3 * F});
  Var q = nn::add(point_embed(tape, store, shape), proposal_query);

  // Lanes around each anchor; the edge set follows the current anchor values.
  if (map_emb.valid()) {
    AttentionEdges edges;
    std::vector<std::size_t> edge_row;
    std::vector<double> seg_local, heading;
    const DenseArray& a = anchor.value();
    for (std::size_t r = 0; r < R; ++r) {
      const std::size_t node = r / K;
      if (in.observed[node] == 0.0) continue;
      const geo::Pose& frame = in.poses[node];
      const geo::Point center = geo::to_global({a[2 * r], a[2 * r + 1]}, frame);
      for (std::size_t g = 0; g < in.segments; ++g) {
        const geo::Pose& sp = in.segment_poses[g];
        if (geo::distance(sp.position, center) > refine_radius) continue;
        const geo::Point local = geo::to_local(sp.position, frame);
        const double rh = sp.heading - frame.heading;
        edges.add(r, g, static_cast<std::int64_t>(edge_row.size()));
        edge_row.push_back(r);
        seg_local.insert(seg_local.end(), {local.x, local.y});
        heading.insert(heading.end(), {std::cos(rh), std::sin(rh)});
      }
    }
    edges.finish(R);
    const std::size_t E = edge_row.size();
    if (E > 0) {
      const Var offset = nn::sub(tape.constant(DenseArray({E, 2}, std::move(seg_local))), nn::gather_rows(anchor, edge_row));
      const Var features = nn::concat_last(nn::smooth_polar(offset, kPolarEps, kPolarScale),
                                           tape.constant(DenseArray({E, 2}, std::move(heading))));
      const Var edge_emb = map_attention.edge(tape, store, features);
      q = map_attention.block(tape, store, q, map_emb, edge_emb, edges);
    }
  }
  q = round(tape, store, in, q);
  out.query = q;
  out.delta = nn::reshape(delta_head(tape, store, q), {N * H, K, F, 2});
  out.logits = nn::reshape(logit_head(tape, store, q), {N * H, K});
  out.final = nn::add(proposals, out.delta);
  return out;
}

}  // namespace ilnet::model
