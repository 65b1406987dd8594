#include "ilnet/model/scene_inputs.hpp"

#include <cmath>

#include "ilnet/errors.hpp"

namespace ilnet::model {
namespace {

using geo::Pose;

// Collects feature rows of one relation while its edges are appended.
class RelationBuilder {
 public:
  explicit RelationBuilder(std::size_t dim) : dim_(dim) {}

  std::int64_t add_pair(const double* feature) {
    data_.insert(data_.end(), feature, feature + dim_);
    return static_cast<std::int64_t>(pairs_++);
  }
  Relation finish(AttentionEdges edges, std::size_t rows) {
    edges.finish(rows);
    Relation r;
    r.edges = std::move(edges);
    if (pairs_ > 0) r.features = DenseArray({pairs_, dim_}, std::move(data_));
    return r;
  }

 private:
  std::size_t dim_;
  std::size_t pairs_ = 0;
  std::vector<double> data_;
};

}  // namespace

void pair_features(const Pose& src, const Pose& dst, double* out) {
  const auto e = geo::relative_edge(src, dst, 0, 0);
  out[0] = e.dist * kDistanceScale;
  out[1] = std::cos(e.edge_dir);
  out[2] = std::sin(e.edge_dir);
  out[3] = std::cos(e.rel_heading);
  out[4] = std::sin(e.rel_heading);
}

SceneInputs build_scene_inputs(const scene::Scenario& s, const ModelConfig& config) {
  s.validate();
  if (s.history != config.history || s.future != config.future) {
    throw DataError("scenario " + s.id + " has H=" + std::to_string(s.history) + ", F=" + std::to_string(s.future) +
                    " but the model expects H=" + std::to_string(config.history) + ", F=" + std::to_string(config.future));
  }
  SceneInputs in;
  const std::size_t N = s.agents.size(), H = static_cast<std::size_t>(s.history), F = static_cast<std::size_t>(s.future);
  const std::size_t K = static_cast<std::size_t>(config.modes);
  in.agents = N;
  in.history = H;
  in.future = F;
  in.modes = K;
  in.focal = *s.agent_index(s.focal_ids.front());

  // Agent nodes.
  in.agent_features = DenseArray({N * H, kAgentFeatureDim});
  in.observed.assign(N * H, 0.0);
  in.poses.assign(N * H, Pose{});
  for (std::size_t n = 0; n < N; ++n) {
    const auto& a = s.agents[n];
    int first = -1;
    for (std::size_t t = 0; t < H; ++t) {
      if (a.states[t].observed) {
        first = static_cast<int>(t);
        break;
      }
    }
    if (first < 0) throw DataError("scenario " + s.id + ": agent " + std::to_string(a.id) + " has no observed history");
    Pose last{a.states[static_cast<std::size_t>(first)].position, geo::normalize_angle(a.states[static_cast<std::size_t>(first)].heading)};
    for (std::size_t t = 0; t < H; ++t) {
      const auto& st = a.states[t];
      double* f = in.agent_features.ptr() + in.node(n, t) * kAgentFeatureDim;
      if (st.observed) {
        last = {st.position, geo::normalize_angle(st.heading)};
        in.observed[in.node(n, t)] = 1.0;
        const double drift = geo::normalize_angle(st.velocity_dir - st.heading);
        f[0] = st.speed / 10.0;
        f[1] = std::cos(drift);
        f[2] = std::sin(drift);
        f[3] = a.length / 5.0;
        f[4] = a.width / 2.0;
        f[5 + static_cast<int>(a.category)] = 1.0;
      }
      in.poses[in.node(n, t)] = last;
    }
  }
  in.scene_frame = in.poses[in.node(in.focal, H - 1)];

  // Map nodes.
  const auto& segs = s.map.segments;
  const std::size_t G = segs.size();
  in.segments = G;
  std::size_t P = 0;
  for (const auto& seg : segs) P += seg.polylines.size();
  in.polylines = P;
  if (G > 0) {
    in.segment_features = DenseArray({G, 1});
    in.polyline_features = DenseArray({P, 1});
    AttentionEdges poly_edges, lane_edges;
    RelationBuilder poly_rel(kPolylineEdgeDim), lane_rel(kLaneEdgeDim);
    std::size_t p = 0;
    for (std::size_t g = 0; g < G; ++g) {
      const Pose sp = segs[g].reference_pose();
      in.segment_poses.push_back(sp);
      in.segment_features[g] = geo::polyline_length(segs[g].centerline().points) / 20.0;
    }
    for (std::size_t g = 0; g < G; ++g) {
      for (const auto& pl : segs[g].polylines) {
        in.polyline_features[p] = geo::polyline_length(pl.points) / 20.0;
        double f[kPolylineEdgeDim] = {};
        pair_features(geo::polyline_reference_pose(pl.points), in.segment_poses[g], f);
        f[kPairFeatureDim + static_cast<int>(pl.kind)] = 1.0;
        poly_edges.add(g, p, poly_rel.add_pair(f));
        ++p;
      }
      for (const auto& link : segs[g].links) {
        const std::size_t src = *s.map.index_of(link.target_id);
        double f[kLaneEdgeDim] = {};
        pair_features(in.segment_poses[src], in.segment_poses[g], f);
        f[kPairFeatureDim + static_cast<int>(link.type)] = 1.0;
        f[kPairFeatureDim + scene::kNumLaneLinkTypes] = 1.0 / link.hops;
        lane_edges.add(g, src, lane_rel.add_pair(f));
      }
    }
    in.polyline_to_segment = poly_rel.finish(std::move(poly_edges), G);
    in.lane_links = lane_rel.finish(std::move(lane_edges), G);
  }

  // Agent relations, expanded over modes.
  const std::size_t R = N * H * K;
  std::vector<geo::Point> seg_points;
  for (const auto& sp : in.segment_poses) seg_points.push_back(sp.position);
  AttentionEdges am_e, ta_e, fa_e, ha_e, agent_e, hist_e, mode_e;
  RelationBuilder am_r(kPairFeatureDim), ta_r(kTemporalFeatureDim), fa_r(kPairFeatureDim), ha_r(kPairFeatureDim),
      agent_r(kPairFeatureDim), hist_r(kTemporalFeatureDim);
  struct Pending {
    std::size_t node;
    std::int64_t feature;
  };
  std::vector<Pending> am, ta, fa, ha, ag, hi;
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t t = 0; t < H; ++t) {
      am.clear();
      ta.clear();
      fa.clear();
      ha.clear();
      ag.clear();
      hi.clear();
      const std::size_t dst = in.node(n, t);
      if (in.observed[dst] != 0.0) {
        const Pose& dp = in.poses[dst];
        double f[kTemporalFeatureDim];
        if (G > 0) {
          for (std::size_t g : geo::radius_neighbors(seg_points, dp.position, config.map_radius)) {
            pair_features(in.segment_poses[g], dp, f);
            am.push_back({g, am_r.add_pair(f)});
          }
        }
        for (std::size_t tp = 0; tp < t; ++tp) {
          const std::size_t src = in.node(n, tp);
          if (in.observed[src] == 0.0) continue;
          pair_features(in.poses[src], dp, f);
          f[kPairFeatureDim] = static_cast<double>(t - tp) / static_cast<double>(H);
          ta.push_back({src, ta_r.add_pair(f)});
          hi.push_back({src, hist_r.add_pair(f)});
        }
        for (std::size_t m = 0; m < N; ++m) {
          if (m == n) continue;
          auto link = [&](std::size_t tm, double radius, RelationBuilder& rel, std::vector<Pending>& out) {
            const std::size_t src = in.node(m, tm);
            if (in.observed[src] == 0.0) return;
            if (geo::distance(in.poses[src].position, dp.position) > radius) return;
            pair_features(in.poses[src], dp, f);
            out.push_back({src, rel.add_pair(f)});
          };
          if (t + 1 < H) link(t + 1, config.future_radius, fa_r, fa);
          if (t >= 1) link(t - 1, config.history_radius, ha_r, ha);
          link(t, config.agent_radius, agent_r, ag);
        }
      }
      for (std::size_t k = 0; k < K; ++k) {
        const std::size_t row = in.row(n, t, k);
        for (const auto& e : am) am_e.add(row, e.node, e.feature);
        for (const auto& e : ta) ta_e.add(row, e.node, e.feature);
        for (const auto& e : fa) fa_e.add(row, e.node, e.feature);
        for (const auto& e : ha) ha_e.add(row, e.node, e.feature);
        for (const auto& e : ag) agent_e.add(row, e.node * K + k, e.feature);
        for (const auto& e : hi) hist_e.add(row, e.node * K + k, e.feature);
        if (in.observed[dst] != 0.0) {
          for (std::size_t kp = 0; kp < K; ++kp) {
            if (kp != k) mode_e.add(row, in.row(n, t, kp));
          }
        }
      }
    }
  }
  in.agent_map = am_r.finish(std::move(am_e), R);
  in.temporal = ta_r.finish(std::move(ta_e), R);
  in.future_agents = fa_r.finish(std::move(fa_e), R);
  in.past_agents = ha_r.finish(std::move(ha_e), R);
  in.fact_agents = agent_r.finish(std::move(agent_e), R);
  in.fact_history = hist_r.finish(std::move(hist_e), R);
  mode_e.finish(R);
  in.fact_modes.edges = std::move(mode_e);

  // Scene-centric geometry for anchor selection.
  in.history_scene = DenseArray({N, H, 2});
  in.frame_rotation = DenseArray({N * H, 2, 2});
  in.frame_offset = DenseArray({N * H, 2});
  for (std::size_t i = 0; i < N * H; ++i) {
    const geo::Point o = geo::to_local(in.poses[i].position, in.scene_frame);
    in.history_scene[2 * i] = o.x;
    in.history_scene[2 * i + 1] = o.y;
    in.frame_offset[2 * i] = o.x;
    in.frame_offset[2 * i + 1] = o.y;
    const double d = in.poses[i].heading - in.scene_frame.heading;
    const double c = std::cos(d), sn = std::sin(d);
    double* r = in.frame_rotation.ptr() + 4 * i;
    r[0] = c;
    r[1] = -sn;
    r[2] = sn;
    r[3] = c;
  }

  // Targets: the F steps after each history step, from observed history and labeled future.
  in.targets = DenseArray({N * H, F, 2});
  in.target_valid.assign(N * H * F, 0.0);
  in.last_valid.assign(N * H, -1);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t t = 0; t < H; ++t) {
      const std::size_t i = in.node(n, t);
      if (in.observed[i] == 0.0) continue;
      for (std::size_t f = 0; f < F; ++f) {
        const std::size_t step = t + f + 1;
        if (step >= H + F) break;
        const auto& st = s.agents[n].states[step];
        if (!st.observed) continue;
        const geo::Point p = geo::to_local(st.position, in.poses[i]);
        in.targets[(i * F + f) * 2] = p.x;
        in.targets[(i * F + f) * 2 + 1] = p.y;
        in.target_valid[i * F + f] = 1.0;
        in.last_valid[i] = static_cast<int>(f);
      }
    }
  }
  return in;
}

}  // namespace ilnet::model
