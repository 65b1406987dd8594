#include "ilnet/scene/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <tuple>
#include <numbers>
#include <optional>
#include <set>

#include "ilnet/errors.hpp"
#include "ilnet/numerics/rng.hpp"

namespace ilnet::scene {
namespace {

using geo::Point;
using geo::Pose;

constexpr double kPi = std::numbers::pi;
constexpr double kLaneWidth = 3.5;
constexpr double kSampleStep = 0.5;
constexpr double kMapPointStep = 2.0;
constexpr int kWarmupSteps = 15;
constexpr int kMaxAttempts = 200;

// Densely sampled route with arc-length parameterization. Headings are
// interpolated between vertex tangents so that they change continuously in s.
class Path {
 public:
  Path() = default;
  explicit Path(std::vector<Point> pts) : pts_(std::move(pts)) {
    cum_.assign(pts_.size(), 0.0);
    for (std::size_t i = 1; i < pts_.size(); ++i) cum_[i] = cum_[i - 1] + geo::distance(pts_[i - 1], pts_[i]);
    tangent_.assign(pts_.size(), 0.0);
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if (i == 0) {
        tangent_[i] = chord_heading(0);
      } else if (i + 1 == pts_.size()) {
        tangent_[i] = chord_heading(i - 1);
      } else {
        const double h0 = chord_heading(i - 1);
        tangent_[i] = h0 + 0.5 * geo::normalize_angle(chord_heading(i) - h0);
      }
    }
    curvature_.assign(pts_.size(), 0.0);
    for (std::size_t i = 1; i + 1 < pts_.size(); ++i) {
      const double ds = cum_[i + 1] - cum_[i - 1];
      if (ds > 0.0) curvature_[i] = geo::normalize_angle(tangent_[i + 1] - tangent_[i - 1]) / ds;
    }
  }

  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }
  const std::vector<Point>& points() const { return pts_; }

  Pose at(double s) const {
    const std::size_t n = pts_.size();
    if (s <= 0.0) {
      const double h = chord_heading(0);
      return {{pts_[0].x + s * std::cos(h), pts_[0].y + s * std::sin(h)}, geo::normalize_angle(tangent_[0])};
    }
    if (s >= length()) {
      const double h = chord_heading(n - 2);
      const double e = s - length();
      return {{pts_[n - 1].x + e * std::cos(h), pts_[n - 1].y + e * std::sin(h)}, geo::normalize_angle(tangent_[n - 1])};
    }
    const std::size_t i = segment_index(s);
    const double len = cum_[i + 1] - cum_[i];
    const double u = len > 0.0 ? (s - cum_[i]) / len : 0.0;
    const Point p{pts_[i].x + u * (pts_[i + 1].x - pts_[i].x), pts_[i].y + u * (pts_[i + 1].y - pts_[i].y)};
    const double h = tangent_[i] + u * geo::normalize_angle(tangent_[i + 1] - tangent_[i]);
    return {p, geo::normalize_angle(h)};
  }

  /// Maximum |curvature| over [s0, s1].
  double max_curvature(double s0, double s1) const {
    double best = 0.0;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if (cum_[i] < s0 || cum_[i] > s1) continue;
      best = std::max(best, std::abs(curvature_[i]));
    }
    return best;
  }

  /// Nearest vertex (arc length, distance) among vertices with s in [s_lo, s_hi].
  std::optional<std::pair<double, double>> project(Point p, double s_lo, double s_hi) const {
    std::optional<std::pair<double, double>> best;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if (cum_[i] < s_lo || cum_[i] > s_hi) continue;
      const double d = geo::distance(p, pts_[i]);
      if (!best || d < best->second) best = {{cum_[i], d}};
    }
    return best;
  }

  Path offset(double d) const {
    std::vector<Point> out;
    out.reserve(pts_.size());
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      out.push_back({pts_[i].x - d * std::sin(tangent_[i]), pts_[i].y + d * std::cos(tangent_[i])});
    }
    return Path(std::move(out));
  }

  Path transformed(const geo::Rigid2& tf) const {
    std::vector<Point> out;
    out.reserve(pts_.size());
    for (const auto& p : pts_) out.push_back(tf.apply(p));
    return Path(std::move(out));
  }

  Path reversed() const { return Path(std::vector<Point>(pts_.rbegin(), pts_.rend())); }

  /// Points between s0 and s1 at roughly `step` spacing, shifted `lateral`
  /// meters to the left of the path.
  std::vector<Point> sample(double s0, double s1, double step, double lateral = 0.0) const {
    const int n = std::max(1, static_cast<int>(std::ceil((s1 - s0) / step - 1e-9)));
    std::vector<Point> out;
    for (int i = 0; i <= n; ++i) {
      const Pose p = at(s0 + (s1 - s0) * i / n);
      out.push_back({p.position.x - lateral * std::sin(p.heading), p.position.y + lateral * std::cos(p.heading)});
    }
    return out;
  }

 private:
  double chord_heading(std::size_t i) const {
    return std::atan2(pts_[i + 1].y - pts_[i].y, pts_[i + 1].x - pts_[i].x);
  }
  std::size_t segment_index(double s) const {
    auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    const auto idx = static_cast<std::size_t>(std::distance(cum_.begin(), it));
    return std::clamp<std::size_t>(idx == 0 ? 0 : idx - 1, 0, pts_.size() - 2);
  }

  std::vector<Point> pts_;
  std::vector<double> cum_;
  std::vector<double> tangent_;
  std::vector<double> curvature_;
};

struct Piece {
  double length;
  double curvature;
};

Path build_path(Pose start, const std::vector<Piece>& pieces) {
  std::vector<Point> pts{start.position};
  double x = start.position.x, y = start.position.y, h = start.heading;
  for (const auto& piece : pieces) {
    const int n = std::max(1, static_cast<int>(std::ceil(piece.length / kSampleStep)));
    const double ds = piece.length / n;
    for (int i = 0; i < n; ++i) {
      if (std::abs(piece.curvature) < 1e-12) {
        x += ds * std::cos(h);
        y += ds * std::sin(h);
      } else {
        const double h1 = h + piece.curvature * ds;
        x += (std::sin(h1) - std::sin(h)) / piece.curvature;
        y -= (std::cos(h1) - std::cos(h)) / piece.curvature;
        h = h1;
      }
      pts.push_back({x, y});
    }
  }
  return Path(std::move(pts));
}

Path concat(const std::vector<const Path*>& parts) {
  std::vector<Point> pts;
  for (const Path* p : parts) {
    for (const auto& q : p->points()) {
      if (!pts.empty() && geo::distance(pts.back(), q) < 1e-6) continue;
      pts.push_back(q);
    }
  }
  return Path(std::move(pts));
}

class MapBuilder {
 public:
  /// Cuts `center` into segments of at most `chunk` meters, chained by
  /// successor links. Returns the segment ids in travel order.
  std::vector<int> add_lane(const Path& center, double chunk) {
    const double len = center.length();
    const int n = std::max(1, static_cast<int>(std::ceil(len / chunk - 1e-9)));
    std::vector<int> ids;
    for (int i = 0; i < n; ++i) {
      const double s0 = len * i / n, s1 = len * (i + 1) / n;
      LaneSegment seg;
      seg.id = next_id_++;
      seg.polylines.push_back({PolylineKind::kCenterline, center.sample(s0, s1, kMapPointStep)});
      seg.polylines.push_back({PolylineKind::kLeftBoundary, center.sample(s0, s1, kMapPointStep, 0.5 * kLaneWidth)});
      seg.polylines.push_back({PolylineKind::kRightBoundary, center.sample(s0, s1, kMapPointStep, -0.5 * kLaneWidth)});
      graph_.segments.push_back(std::move(seg));
      if (!ids.empty()) connect(ids.back(), graph_.segments.back().id);
      ids.push_back(graph_.segments.back().id);
    }
    return ids;
  }

  void connect(int from, int to) {
    add_link(from, {to, LaneLinkType::kSuccessor, 1});
    add_link(to, {from, LaneLinkType::kPredecessor, 1});
  }

  void neighbors(const std::vector<int>& a, const std::vector<int>& b) {
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
      add_link(a[i], {b[i], LaneLinkType::kNeighbor, 1});
      add_link(b[i], {a[i], LaneLinkType::kNeighbor, 1});
    }
  }

  /// Adds two-hop successor and predecessor links, then returns the graph.
  LaneGraph finish() {
    std::vector<std::pair<int, LaneLink>> extra;
    for (const auto& seg : graph_.segments) {
      for (const auto& l1 : seg.links) {
        if (l1.hops != 1 || l1.type == LaneLinkType::kNeighbor) continue;
        const auto& mid = graph_.segments[*graph_.index_of(l1.target_id)];
        for (const auto& l2 : mid.links) {
          if (l2.hops != 1 || l2.type != l1.type || l2.target_id == seg.id) continue;
          extra.push_back({seg.id, {l2.target_id, l1.type, 2}});
        }
      }
    }
    for (const auto& [id, link] : extra) add_link(id, link);
    return graph_;
  }

 private:
  void add_link(int from, LaneLink link) {
    auto& links = graph_.segments[*graph_.index_of(from)].links;
    if (std::find(links.begin(), links.end(), link) == links.end()) links.push_back(link);
  }

  LaneGraph graph_;
  int next_id_ = 0;
};

struct Yield {
  std::size_t other;
  double stop_s;
  double other_conflict_s;
};

struct SimAgent {
  AgentCategory category = AgentCategory::kVehicle;
  double length = 4.5;
  double width = 1.9;
  Path route;
  double s = 0.0;
  double v = 0.0;
  double v_des = 10.0;
  double lat = 0.0;
  int slave = -1;  ///< copies the speed of this agent when >= 0
  int event_step = -1;
  double event_v_des = 0.0;
  std::vector<Yield> yields;
};

constexpr double kAccel = 1.5;
constexpr double kBrake = 2.5;
constexpr double kHeadway = 1.2;
constexpr double kMinGap = 2.0;
constexpr double kMaxDecel = 8.0;
constexpr double kLatAccel = 2.5;

double idm(double v, double v0, std::optional<double> gap, double dv, double min_gap) {
  double a = kAccel * (1.0 - std::pow(v / std::max(v0, 0.1), 4));
  if (gap) {
    const double star = min_gap + std::max(0.0, v * kHeadway + v * dv / (2.0 * std::sqrt(kAccel * kBrake)));
    const double g = std::max(*gap, 0.1);
    a -= kAccel * (star / g) * (star / g);
  }
  return std::max(a, -kMaxDecel);
}

class Simulator {
 public:
  Simulator(std::vector<SimAgent> agents, double dt, Rng& rng) : agents_(std::move(agents)), dt_(dt), rng_(rng) {}

  std::vector<std::vector<AgentState>> run(int warmup, int steps) {
    std::vector<std::vector<AgentState>> out(agents_.size());
    std::vector<Point> prev(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i) prev[i] = position(agents_[i]);
    for (int k = 0; k < warmup + steps; ++k) {
      step(k - warmup);
      for (std::size_t i = 0; i < agents_.size(); ++i) {
        const Point p = position(agents_[i]);
        if (k >= warmup) {
          AgentState st;
          st.position = p;
          st.heading = agents_[i].route.at(agents_[i].s).heading;
          st.speed = agents_[i].v;
          const double dx = p.x - prev[i].x, dy = p.y - prev[i].y;
          st.velocity_dir = std::hypot(dx, dy) > 1e-9 ? std::atan2(dy, dx) : st.heading;
          st.observed = true;
          out[i].push_back(st);
        }
        prev[i] = p;
      }
    }
    return out;
  }

 private:
  static Point position(const SimAgent& a) {
    const Pose pose = a.route.at(a.s);
    return {pose.position.x - a.lat * std::sin(pose.heading), pose.position.y + a.lat * std::cos(pose.heading)};
  }

  double acceleration(std::size_t i, int step) {
    SimAgent& a = agents_[i];
    if (a.event_step >= 0 && step >= a.event_step) a.v_des = a.event_v_des;
    const double horizon = a.s + std::max(2.0 * a.v, 5.0) + 5.0;
    const double kappa = a.route.max_curvature(a.s, horizon);
    double v0 = a.v_des;
    if (kappa > 1e-6) v0 = std::min(v0, std::sqrt(kLatAccel / kappa));
    double acc = idm(a.v, v0, std::nullopt, 0.0, kMinGap);
    const Point me = position(a);
    for (std::size_t j = 0; j < agents_.size(); ++j) {
      if (j == i) continue;
      const Point other = position(agents_[j]);
      if (geo::distance(me, other) > 60.0) continue;
      auto proj = a.route.project(other, a.s + 0.5, a.s + 50.0);
      if (!proj || proj->second > 2.0) continue;
      const double gap = proj->first - a.s - 0.5 * (a.length + agents_[j].length);
      acc = std::min(acc, idm(a.v, v0, gap, a.v - agents_[j].v, kMinGap));
    }
    for (const auto& y : a.yields) {
      const SimAgent& o = agents_[y.other];
      if (a.s > y.stop_s + 0.5) continue;
      if (o.s > y.other_conflict_s + o.length + 2.0) continue;
      const double t_other = (y.other_conflict_s - o.s) / std::max(o.v, 1.0);
      if (t_other > 4.0) continue;
      const double gap = y.stop_s - a.s;
      if (gap < a.v * a.v / (2.0 * 6.0)) continue;
      acc = std::min(acc, idm(a.v, v0, gap, a.v, 0.5));
    }
    return acc;
  }

  void step(int step_index) {
    std::vector<double> v_new(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      v_new[i] = std::max(0.0, agents_[i].v + acceleration(i, step_index) * dt_);
    }
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      if (agents_[i].slave >= 0) v_new[i] = v_new[static_cast<std::size_t>(agents_[i].slave)];
    }
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      SimAgent& a = agents_[i];
      a.v = v_new[i];
      const double travel = a.v * dt_;
      const double bound = 0.2 * travel;
      const double dl = std::clamp(0.15 * travel * rng_.uniform(-1.0, 1.0) - 0.2 * a.lat * (travel > 0.0 ? 1.0 : 0.0),
                                   -bound, bound);
      a.lat = std::clamp(a.lat + dl, -0.3, 0.3);
      a.s += travel;
    }
  }

  std::vector<SimAgent> agents_;
  double dt_;
  Rng& rng_;
};

SimAgent make_vehicle(Rng& rng, Path route, double s_at_t0, double v, double dt) {
  SimAgent a;
  a.length = rng.uniform(4.0, 5.0);
  a.width = rng.uniform(1.7, 2.0);
  a.route = std::move(route);
  a.v = v;
  a.v_des = v * rng.uniform(0.95, 1.1);
  a.s = s_at_t0 - v * kWarmupSteps * dt;
  return a;
}

struct Layout {
  LaneGraph map;
  std::vector<SimAgent> agents;
  std::size_t focal = 0;
};

// Two parallel lanes along a road built from `pieces`; lane 0 is the right lane.
struct TwoLaneRoad {
  Path lanes[2];
};

TwoLaneRoad two_lane_road(const std::vector<Piece>& pieces, MapBuilder& mb) {
  TwoLaneRoad road;
  road.lanes[0] = build_path({{0.0, 0.0}, 0.0}, pieces);
  road.lanes[1] = road.lanes[0].offset(kLaneWidth);
  const auto a = mb.add_lane(road.lanes[0], 20.0);
  const auto b = mb.add_lane(road.lanes[1], 20.0);
  mb.neighbors(a, b);
  return road;
}

Layout layout_follow(Rng& rng, const GeneratorOptions& opt) {
  const double dt = 1.0 / opt.sample_rate_hz;
  MapBuilder mb;
  std::vector<Piece> pieces{{60.0, 0.0}};
  if (rng.bernoulli(0.5)) {
    const double k = rng.uniform(0.002, 0.01) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
    pieces.push_back({80.0, k});
  } else {
    pieces.push_back({80.0, 0.0});
  }
  pieces.push_back({80.0, 0.0});
  const TwoLaneRoad road = two_lane_road(pieces, mb);
  Layout out;
  const int platoon = static_cast<int>(rng.uniform_int(2, 4));
  const double v_lead = rng.uniform(6.0, 14.0);
  double s = rng.uniform(110.0, 130.0);
  for (int i = 0; i < platoon; ++i) {
    const double v = i == 0 ? v_lead : v_lead * rng.uniform(0.9, 1.15);
    SimAgent a = make_vehicle(rng, road.lanes[0], s, v, dt);
    if (i == 0 && rng.bernoulli(0.75)) {
      a.event_step = static_cast<int>(rng.uniform_int(0, opt.history + opt.future / 2));
      a.event_v_des = rng.bernoulli(0.6) ? v * rng.uniform(0.2, 0.6) : v * rng.uniform(1.2, 1.5);
    }
    out.agents.push_back(std::move(a));
    s -= rng.uniform(9.0, 25.0);
  }
  out.focal = 1;
  const int side = static_cast<int>(rng.uniform_int(0, 2));
  for (int i = 0; i < side; ++i) {
    const bool cyclist = rng.bernoulli(0.2);
    const double v = cyclist ? rng.uniform(3.0, 6.0) : rng.uniform(6.0, 14.0);
    SimAgent a = make_vehicle(rng, road.lanes[1], rng.uniform(70.0, 135.0), v, dt);
    if (cyclist) {
      a.category = AgentCategory::kCyclist;
      a.length = 1.8;
      a.width = 0.6;
    }
    out.agents.push_back(std::move(a));
  }
  out.map = mb.finish();
  return out;
}

Layout layout_curve(Rng& rng, const GeneratorOptions& opt) {
  const double dt = 1.0 / opt.sample_rate_hz;
  MapBuilder mb;
  const double radius = rng.uniform(15.0, 40.0);
  const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  const double turn = rng.uniform(0.5 * kPi, 0.8 * kPi);
  const double entry = 70.0;
  const TwoLaneRoad road = two_lane_road({{entry, 0.0}, {radius * turn, sign / radius}, {60.0, 0.0}}, mb);
  Layout out;
  const int lane = static_cast<int>(rng.uniform_int(0, 1));
  const double v = rng.uniform(7.0, 13.0);
  // Place the focal agent so that the last history step falls near the curve entry.
  const double s_last = entry + rng.uniform(-8.0, 4.0);
  out.agents.push_back(make_vehicle(rng, road.lanes[lane], s_last - v * (opt.history - 1) * dt, v, dt));
  out.focal = 0;
  const int others = static_cast<int>(rng.uniform_int(1, 4));
  std::vector<std::pair<int, double>> taken{{lane, out.agents[0].s + v * kWarmupSteps * dt}};
  for (int i = 0; i < others; ++i) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      const int l = static_cast<int>(rng.uniform_int(0, 1));
      const double s0 = rng.uniform(25.0, 95.0);
      bool clear = true;
      for (const auto& [tl, ts] : taken) {
        if (tl == l && std::abs(ts - s0) < 10.0) clear = false;
      }
      if (!clear) continue;
      taken.push_back({l, s0});
      out.agents.push_back(make_vehicle(rng, road.lanes[l], s0, rng.uniform(6.0, 13.0), dt));
      break;
    }
  }
  out.map = mb.finish();
  return out;
}

Layout layout_merge(Rng& rng, const GeneratorOptions& opt) {
  const double dt = 1.0 / opt.sample_rate_hz;
  MapBuilder mb;
  const double main_len = 100.0;
  const Path lane0_in = build_path({{-main_len, 0.0}, 0.0}, {{main_len, 0.0}});
  const Path lane0_out = build_path({{0.0, 0.0}, 0.0}, {{main_len, 0.0}});
  const Path lane1_in = lane0_in.offset(kLaneWidth);
  const Path lane1_out = lane0_out.offset(kLaneWidth);
  const double phi = rng.uniform(12.0, 25.0) * kPi / 180.0;
  const double r = rng.uniform(40.0, 80.0);
  const Path ramp = build_path({{0.0, 0.0}, kPi}, {{r * phi, 1.0 / r}, {60.0, 0.0}}).reversed();

  const auto l0a = mb.add_lane(lane0_in, 20.0);
  const auto l0b = mb.add_lane(lane0_out, 20.0);
  const auto l1a = mb.add_lane(lane1_in, 20.0);
  const auto l1b = mb.add_lane(lane1_out, 20.0);
  const auto rp = mb.add_lane(ramp, 20.0);
  mb.connect(l0a.back(), l0b.front());
  mb.connect(l1a.back(), l1b.front());
  mb.connect(rp.back(), l0b.front());
  mb.neighbors(l0a, l1a);
  mb.neighbors(l0b, l1b);

  const Path main0 = concat({&lane0_in, &lane0_out});
  const Path main1 = concat({&lane1_in, &lane1_out});
  const Path ramp_route = concat({&ramp, &lane0_out});
  const double ramp_merge_s = ramp.length();

  Layout out;
  const double t_hist = (opt.history - 1) * dt;
  // Ramp agent (focal) reaches the merge point shortly after the history window.
  const double v_ramp = rng.uniform(8.0, 13.0);
  const double t_merge = t_hist + rng.uniform(-0.3, 1.2);
  out.agents.push_back(make_vehicle(rng, ramp_route, ramp_merge_s - v_ramp * t_merge, v_ramp, dt));
  out.focal = 0;
  // Main-lane agent arriving at the merge point at a similar time, with a
  // side-by-side partner in the left lane holding the same speed.
  const double v_main = rng.uniform(9.0, 14.0);
  const double t_main = t_merge + rng.uniform(-1.0, 1.0);
  const double s_main = main_len - v_main * t_main;
  out.agents.push_back(make_vehicle(rng, main0, s_main, v_main, dt));
  SimAgent partner = make_vehicle(rng, main1, s_main + rng.uniform(-1.5, 1.5), v_main, dt);
  partner.slave = 1;
  out.agents.push_back(std::move(partner));
  out.agents[0].yields.push_back({1, ramp_merge_s - 3.0, main_len});
  const int extra = static_cast<int>(rng.uniform_int(0, 2));
  for (int i = 0; i < extra; ++i) {
    const double s0 = s_main + (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(12.0, 30.0);
    const double v = rng.uniform(9.0, 14.0);
    if (rng.bernoulli(0.5)) {
      out.agents.push_back(make_vehicle(rng, main0, s0, v, dt));
      out.agents[0].yields.push_back({out.agents.size() - 1, ramp_merge_s - 3.0, main_len});
    } else {
      out.agents.push_back(make_vehicle(rng, main1, s0, v, dt));
    }
  }
  out.map = mb.finish();
  return out;
}

enum class Maneuver { kStraight, kLeft, kRight };

Layout layout_intersection(Rng& rng, const GeneratorOptions& opt) {
  const double dt = 1.0 / opt.sample_rate_hz;
  const double box = 12.0;
  const double arm = 40.0;
  const double inner = 0.5 * kLaneWidth, outer = 1.5 * kLaneWidth;
  MapBuilder mb;

  struct ArmLanes {
    Path in[2], out[2];
    std::vector<int> in_ids[2], out_ids[2];
  };
  ArmLanes arms[4];
  const double offsets[2] = {inner, outer};
  for (int k = 0; k < 4; ++k) {
    const geo::Rigid2 rot{k * 0.5 * kPi, {0.0, 0.0}};
    for (int l = 0; l < 2; ++l) {
      arms[k].in[l] = build_path({{box + arm, offsets[l]}, kPi}, {{arm, 0.0}}).transformed(rot);
      arms[k].out[l] = build_path({{box, -offsets[l]}, 0.0}, {{arm, 0.0}}).transformed(rot);
      arms[k].in_ids[l] = mb.add_lane(arms[k].in[l], 20.0);
      arms[k].out_ids[l] = mb.add_lane(arms[k].out[l], 20.0);
    }
    mb.neighbors(arms[k].in_ids[0], arms[k].in_ids[1]);
    mb.neighbors(arms[k].out_ids[0], arms[k].out_ids[1]);
  }
  // Connector (arm, lane, maneuver) -> path; target arm and lane follow from the maneuver.
  struct Connector {
    Path path;
    int to_arm, to_lane;
  };
  auto connector = [&](int k, int lane, Maneuver m) {
    const geo::Rigid2 rot{k * 0.5 * kPi, {0.0, 0.0}};
    const double o = offsets[lane];
    const Pose start{{box, o}, kPi};
    switch (m) {
      case Maneuver::kStraight:
        return Connector{build_path(start, {{2.0 * box, 0.0}}).transformed(rot), (k + 2) % 4, lane};
      case Maneuver::kRight:
        return Connector{build_path(start, {{(box - o) * 0.5 * kPi, -1.0 / (box - o)}}).transformed(rot), (k + 1) % 4, lane};
      case Maneuver::kLeft:
        return Connector{build_path(start, {{(box + o) * 0.5 * kPi, 1.0 / (box + o)}}).transformed(rot), (k + 3) % 4, lane};
    }
    return Connector{};
  };
  const std::pair<int, Maneuver> allowed[4] = {
      {0, Maneuver::kStraight}, {0, Maneuver::kLeft}, {1, Maneuver::kStraight}, {1, Maneuver::kRight}};
  std::map<std::tuple<int, int, int>, Connector> connectors;
  for (int k = 0; k < 4; ++k) {
    for (const auto& [lane, m] : allowed) {
      Connector c = connector(k, lane, m);
      const auto ids = mb.add_lane(c.path, 40.0);
      mb.connect(arms[k].in_ids[lane].back(), ids.front());
      mb.connect(ids.back(), arms[c.to_arm].out_ids[c.to_lane].front());
      connectors[{k, lane, static_cast<int>(m)}] = std::move(c);
    }
  }
  auto route = [&](int k, int lane, Maneuver m) {
    const Connector& c = connectors.at({k, lane, static_cast<int>(m)});
    return concat({&arms[k].in[lane], &c.path, &arms[c.to_arm].out[c.to_lane]});
  };
  auto lane_for = [&](Maneuver m) {
    if (m == Maneuver::kLeft) return 0;
    if (m == Maneuver::kRight) return 1;
    return static_cast<int>(rng.uniform_int(0, 1));
  };
  auto pick_maneuver = [&](double p_left, double p_right) {
    const double u = rng.uniform();
    if (u < p_left) return Maneuver::kLeft;
    if (u < p_left + p_right) return Maneuver::kRight;
    return Maneuver::kStraight;
  };

  Layout out;
  struct Placed {
    int arm, lane;
    double dist;  ///< distance before the stop line at t = 0
  };
  std::vector<Placed> placed;
  std::vector<std::pair<int, Maneuver>> plans;
  auto free_spot = [&](int k, int lane, double d) {
    for (const auto& p : placed) {
      if (p.arm == k && p.lane == lane && std::abs(p.dist - d) < 9.0) return false;
    }
    return true;
  };
  auto add = [&](int k, int lane, Maneuver m, double dist, double v) {
    out.agents.push_back(make_vehicle(rng, route(k, lane, m), arm - dist, v, dt));
    placed.push_back({k, lane, dist});
    plans.push_back({k, m});
    return out.agents.size() - 1;
  };
  const double t_hist = (opt.history - 1) * dt;

  // Focal agent close to the stop line at the end of the history window.
  const int arm_f = static_cast<int>(rng.uniform_int(0, 3));
  const Maneuver m_f = pick_maneuver(0.45, 0.25);
  const double v_f = rng.uniform(5.0, 9.0);
  const int lane_f = lane_for(m_f);
  const double d_f = rng.uniform(-6.0, 6.0) + v_f * t_hist;
  out.focal = add(arm_f, lane_f, m_f, d_f, v_f);
  // Optional partner driving straight next to the focal agent.
  if (rng.bernoulli(0.5)) {
    const std::size_t partner = add(arm_f, 1 - lane_f, Maneuver::kStraight, d_f + rng.uniform(-2.0, 2.0), v_f);
    out.agents[partner].slave = static_cast<int>(out.focal);
  }

  // Cross traffic from a perpendicular arm.
  const int arm_c = (arm_f + (rng.bernoulli(0.5) ? 1 : 3)) % 4;
  const Maneuver m_c = pick_maneuver(0.3, 0.3);
  const double v_c = rng.uniform(5.0, 9.0);
  for (int attempt = 0; attempt < 20; ++attempt) {
    const int lane = lane_for(m_c);
    const double d = rng.uniform(0.0, 12.0) + v_c * t_hist;
    if (!free_spot(arm_c, lane, d)) continue;
    add(arm_c, lane, m_c, d, v_c);
    break;
  }

  // Side-by-side pair going straight on a remaining arm.
  std::vector<int> free_arms;
  for (int k = 0; k < 4; ++k) {
    if (k != arm_f && k != arm_c) free_arms.push_back(k);
  }
  const int arm_p = free_arms[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(free_arms.size()) - 1))];
  const double v_p = rng.uniform(4.0, 9.0);
  const double d_p = rng.uniform(3.0, 25.0) + v_p * t_hist;
  const std::size_t lead = add(arm_p, 0, Maneuver::kStraight, d_p, v_p);
  const std::size_t mate = add(arm_p, 1, Maneuver::kStraight, d_p + rng.uniform(-1.5, 1.5), v_p);
  out.agents[mate].slave = static_cast<int>(lead);

  const int extra = static_cast<int>(rng.uniform_int(0, 3));
  for (int i = 0; i < extra; ++i) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      const int k = static_cast<int>(rng.uniform_int(0, 3));
      const Maneuver m = pick_maneuver(0.3, 0.3);
      const int lane = lane_for(m);
      const double v = rng.uniform(4.0, 9.0);
      const double d = rng.uniform(2.0, 30.0) + v * t_hist;
      if (d > arm + 10.0 || !free_spot(k, lane, d)) continue;
      add(k, lane, m, d, v);
      break;
    }
  }

  // Arms 0 and 2 have priority. Yielding agents stop before the box while a
  // priority agent on a crossing route approaches the conflict point; left
  // turners on priority arms yield to oncoming priority traffic.
  auto in_box = [&](Point p) { return std::abs(p.x) <= box + 1.0 && std::abs(p.y) <= box + 1.0; };
  for (std::size_t i = 0; i < out.agents.size(); ++i) {
    const auto [arm_i, m_i] = plans[i];
    const bool priority_i = arm_i % 2 == 0;
    for (std::size_t j = 0; j < out.agents.size(); ++j) {
      if (i == j || plans[j].first == arm_i) continue;
      const bool priority_j = plans[j].first % 2 == 0;
      bool yields = false;
      if (!priority_i && priority_j) yields = true;
      if (priority_i && priority_j && m_i == Maneuver::kLeft && plans[j].second != Maneuver::kLeft) yields = true;
      if (!yields) continue;
      const Path& ri = out.agents[i].route;
      const Path& rj = out.agents[j].route;
      std::optional<std::pair<double, double>> conflict;
      for (const auto& p : ri.points()) {
        if (!in_box(p)) continue;
        auto proj = rj.project(p, 0.0, rj.length());
        if (proj && proj->second < 2.5) {
          conflict = {{ri.project(p, 0.0, ri.length())->first, proj->first}};
          break;
        }
      }
      if (!conflict) continue;
      out.agents[i].yields.push_back({j, arm - 1.0, conflict->second});
    }
  }
  out.map = mb.finish();
  return out;
}

Scenario build(ScenarioKind kind, std::uint64_t seed, const GeneratorOptions& opt, Rng& rng) {
  Layout layout;
  switch (kind) {
    case ScenarioKind::kFollow: layout = layout_follow(rng, opt); break;
    case ScenarioKind::kIntersection: layout = layout_intersection(rng, opt); break;
    case ScenarioKind::kMerge: layout = layout_merge(rng, opt); break;
    case ScenarioKind::kCurve: layout = layout_curve(rng, opt); break;
  }
  std::vector<AgentTrack> tracks(layout.agents.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    tracks[i].category = layout.agents[i].category;
    tracks[i].length = layout.agents[i].length;
    tracks[i].width = layout.agents[i].width;
  }
  Simulator sim(std::move(layout.agents), 1.0 / opt.sample_rate_hz, rng);
  auto states = sim.run(kWarmupSteps, opt.history + opt.future);
  for (std::size_t i = 0; i < tracks.size(); ++i) tracks[i].states = std::move(states[i]);

  // Agent order and ids are shuffled so the focal agent has no fixed slot.
  std::vector<std::size_t> order(tracks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  }
  Scenario s;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(seed));
  s.id = std::string(kind_name(kind)) + "-" + buf;
  s.kind = kind;
  s.sample_rate_hz = opt.sample_rate_hz;
  s.history = opt.history;
  s.future = opt.future;
  for (std::size_t slot = 0; slot < order.size(); ++slot) {
    AgentTrack t = tracks[order[slot]];
    t.id = static_cast<int>(slot) + 1;
    if (order[slot] == layout.focal) s.focal_ids = {t.id};
    s.agents.push_back(std::move(t));
  }
  s.map = std::move(layout.map);
  const geo::Rigid2 placement{rng.uniform(-kPi, kPi), {rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0)}};
  return transform_scenario(s, placement);
}

bool physically_sane(const Scenario& s) {
  const double dt = s.dt();
  for (const auto& a : s.agents) {
    for (std::size_t t = 1; t < a.states.size(); ++t) {
      const double d = geo::distance(a.states[t - 1].position, a.states[t].position);
      if (d > 1.5 * a.states[t].speed * dt + 1e-12) return false;
    }
  }
  return true;
}

}  // namespace

bool kind_properties_hold(const Scenario& s) {
  if (s.agents.size() < 2 || s.agents.size() > 8) return false;
  const auto focal = s.agent_index(s.focal_ids.front());
  if (!focal) return false;
  if (s.kind == ScenarioKind::kIntersection) {
    bool crossing = false;
    for (std::size_t i = 0; i < s.agents.size() && !crossing; ++i) {
      for (std::size_t j = i + 1; j < s.agents.size(); ++j) {
        const double d = geo::normalize_angle(s.agents[i].states[0].heading - s.agents[j].states[0].heading);
        if (std::abs(d) >= kPi / 3.0) crossing = true;
      }
    }
    if (!crossing) return false;
  }
  if (s.kind == ScenarioKind::kIntersection || s.kind == ScenarioKind::kMerge) {
    const int steps = s.total_steps();
    bool close_pair = false;
    for (std::size_t i = 0; i < s.agents.size() && !close_pair; ++i) {
      for (std::size_t j = i + 1; j < s.agents.size(); ++j) {
        int count = 0;
        for (int t = 0; t < steps; ++t) {
          const auto ts = static_cast<std::size_t>(t);
          if (geo::distance(s.agents[i].states[ts].position, s.agents[j].states[ts].position) <= 5.0) ++count;
        }
        if (2 * count >= steps) close_pair = true;
      }
    }
    if (!close_pair) return false;
  }
  if (s.kind == ScenarioKind::kCurve && absolute_turn_angle_deg(s.agents[*focal], s.history) < 10.0) return false;
  return true;
}

Scenario generate_scenario(ScenarioKind kind, std::uint64_t seed, const GeneratorOptions& options) {
  if (options.history < 2 || options.future < 1 || !(options.sample_rate_hz > 0.0)) {
    throw ArgumentError("generator needs history >= 2, future >= 1 and a positive sample rate");
  }
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    Scenario s = build(kind, seed, options, rng);
    if (kind_properties_hold(s) && physically_sane(s)) return s;
  }
  throw StateError(std::string("generator could not satisfy the ") + kind_name(kind) + " scenario properties");
}

Scenario generate_dataset_item(const DatasetSpec& spec, int index) {
  double total = 0.0;
  for (const auto& [name, w] : spec.kind_mix) {
    kind_from_name(name);
    if (w < 0.0) throw ArgumentError("kind mix weight for '" + name + "' is negative");
    total += w;
  }
  if (!(total > 0.0)) throw ArgumentError("kind mix has no positive weight");
  const std::uint64_t item_seed = derive_seed(spec.seed, static_cast<std::uint64_t>(index));
  Rng pick(derive_seed(item_seed, 0xC0FFEE));
  const double u = pick.uniform() * total;
  double acc = 0.0;
  ScenarioKind kind = kind_from_name(spec.kind_mix.rbegin()->first);
  for (const auto& [name, w] : spec.kind_mix) {
    acc += w;
    if (u < acc) {
      kind = kind_from_name(name);
      break;
    }
  }
  return generate_scenario(kind, item_seed, spec.options);
}

SplitManifest generate_dataset(const std::filesystem::path& dir, const DatasetSpec& spec) {
  if (spec.num_train < 0 || spec.num_val < 0) throw ArgumentError("dataset sizes must be non-negative");
  SplitManifest m;
  m.seed = spec.seed;
  m.kind_mix = spec.kind_mix;
  char name[32];
  for (int i = 0; i < spec.num_train + spec.num_val; ++i) {
    const bool train = i < spec.num_train;
    std::snprintf(name, sizeof(name), "%s/%05d.json", train ? "train" : "val", train ? i : i - spec.num_train);
    save_scenario(dir / name, generate_dataset_item(spec, i));
    (train ? m.train : m.val).push_back(name);
  }
  save_manifest(dir / kManifestFileName, m);
  return m;
}

}  // namespace ilnet::scene
