#include "ilnet/scene/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "ilnet/errors.hpp"

namespace ilnet::scene {

const Polyline& LaneSegment::centerline() const {
  for (const auto& p : polylines) {
    if (p.kind == PolylineKind::kCenterline) return p;
  }
  throw DataError("lane segment " + std::to_string(id) + " has no centerline");
}

geo::Pose LaneSegment::reference_pose() const { return geo::polyline_reference_pose(centerline().points); }

std::optional<std::size_t> LaneGraph::index_of(int id) const {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].id == id) return i;
  }
  return std::nullopt;
}

void LaneGraph::validate() const {
  std::set<int> ids;
  for (const auto& s : segments) {
    if (!ids.insert(s.id).second) throw DataError("duplicate lane segment id " + std::to_string(s.id));
  }
  for (const auto& s : segments) {
    if (s.polylines.empty()) throw DataError("lane segment " + std::to_string(s.id) + " has no polylines");
    int centerlines = 0;
    for (const auto& p : s.polylines) {
      if (p.kind == PolylineKind::kCenterline) {
        ++centerlines;
        if (p.points.size() < 2) throw DataError("centerline of lane " + std::to_string(s.id) + " has < 2 points");
      }
      if (p.points.size() < 2) throw DataError("polyline of lane " + std::to_string(s.id) + " has < 2 points");
    }
    if (centerlines != 1) throw DataError("lane segment " + std::to_string(s.id) + " needs exactly one centerline");
    for (const auto& l : s.links) {
      if (!ids.count(l.target_id)) {
        throw DataError("lane " + std::to_string(s.id) + " links to unknown lane " + std::to_string(l.target_id));
      }
      if (l.hops < 1) throw DataError("lane " + std::to_string(s.id) + " has a link with hop count < 1");
    }
  }
}

const char* kind_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kFollow: return "follow";
    case ScenarioKind::kIntersection: return "intersection";
    case ScenarioKind::kMerge: return "merge";
    case ScenarioKind::kCurve: return "curve";
  }
  return "follow";
}

ScenarioKind kind_from_name(const std::string& name) {
  if (name == "follow") return ScenarioKind::kFollow;
  if (name == "intersection") return ScenarioKind::kIntersection;
  if (name == "merge") return ScenarioKind::kMerge;
  if (name == "curve") return ScenarioKind::kCurve;
  throw ArgumentError("unknown scenario kind '" + name + "'");
}

std::optional<std::size_t> Scenario::agent_index(int agent_id) const {
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (agents[i].id == agent_id) return i;
  }
  return std::nullopt;
}

void Scenario::validate() const {
  if (history < 1 || future < 1) throw DataError("scenario " + id + ": history and future must be positive");
  if (!(sample_rate_hz > 0.0)) throw DataError("scenario " + id + ": sample rate must be positive");
  if (agents.empty()) throw DataError("scenario " + id + ": no agents");
  std::set<int> ids;
  for (const auto& a : agents) {
    if (!ids.insert(a.id).second) throw DataError("scenario " + id + ": duplicate agent id " + std::to_string(a.id));
    if (static_cast<int>(a.states.size()) != total_steps()) {
      throw DataError("scenario " + id + ": agent " + std::to_string(a.id) + " has " + std::to_string(a.states.size()) +
                      " states, expected " + std::to_string(total_steps()));
    }
    for (const auto& st : a.states) {
      if (st.speed < 0.0) throw DataError("scenario " + id + ": negative speed for agent " + std::to_string(a.id));
    }
  }
  if (focal_ids.empty()) throw DataError("scenario " + id + ": focal_ids is empty");
  for (int f : focal_ids) {
    if (!ids.count(f)) throw DataError("scenario " + id + ": focal id " + std::to_string(f) + " is not an agent");
  }
  map.validate();
}

Scenario transform_scenario(const Scenario& s, const geo::Rigid2& tf) {
  Scenario out = s;
  for (auto& a : out.agents) {
    for (auto& st : a.states) {
      st.position = tf.apply(st.position);
      st.heading = tf.apply_heading(st.heading);
      st.velocity_dir = tf.apply_heading(st.velocity_dir);
    }
  }
  for (auto& seg : out.map.segments) {
    for (auto& pl : seg.polylines) {
      for (auto& p : pl.points) p = tf.apply(p);
    }
  }
  return out;
}

std::vector<geo::Point> constant_velocity_rollout(const AgentTrack& track, int history, int future, double dt) {
  int last = -1, count = 0;
  for (int t = history - 1; t >= 0; --t) {
    if (!track.states[static_cast<std::size_t>(t)].observed) continue;
    if (last < 0) last = t;
    ++count;
  }
  if (count < 2) throw DataError("constant velocity rollout of agent " + std::to_string(track.id) + " needs two observed states");
  const AgentState& st = track.states[static_cast<std::size_t>(last)];
  const double vx = st.speed * std::cos(st.velocity_dir), vy = st.speed * std::sin(st.velocity_dir);
  std::vector<geo::Point> out;
  out.reserve(static_cast<std::size_t>(future));
  // Steps are counted from the last observed slot.
  const int lead = history - 1 - last;
  for (int f = 1; f <= future; ++f) {
    const double tau = static_cast<double>(f + lead) * dt;
    out.push_back({st.position.x + vx * tau, st.position.y + vy * tau});
  }
  return out;
}

double absolute_turn_angle_deg(const AgentTrack& track, int history) {
  int first = -1, last = -1;
  for (int t = 0; t < history; ++t) {
    if (!track.states[static_cast<std::size_t>(t)].observed) continue;
    if (first < 0) first = t;
    last = t;
  }
  if (first < 0) throw DataError("agent " + std::to_string(track.id) + " has no observed history");
  const geo::Point a = track.states[static_cast<std::size_t>(first)].position;
  const geo::Point b = track.states[static_cast<std::size_t>(last)].position;
  const geo::Point c = track.states.back().position;
  const double hx = b.x - a.x, hy = b.y - a.y, fx = c.x - b.x, fy = c.y - b.y;
  const double nh = std::hypot(hx, hy), nf = std::hypot(fx, fy);
  if (nh == 0.0 || nf == 0.0) return 0.0;
  const double cosang = std::clamp((hx * fx + hy * fy) / (nh * nf), -1.0, 1.0);
  return std::acos(cosang) * 180.0 / std::numbers::pi;
}

}  // namespace ilnet::scene
