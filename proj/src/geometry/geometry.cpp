#include "ilnet/geometry/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ilnet/errors.hpp"

namespace ilnet::geo {

double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

Point to_local(Point target, const Pose& frame) {
  const double dx = target.x - frame.position.x;
  const double dy = target.y - frame.position.y;
  const double c = std::cos(frame.heading), s = std::sin(frame.heading);
  return {c * dx + s * dy, -s * dx + c * dy};
}

Point to_global(Point local, const Pose& frame) {
  const double c = std::cos(frame.heading), s = std::sin(frame.heading);
  return {frame.position.x + c * local.x - s * local.y, frame.position.y + s * local.x + c * local.y};
}

PolarCoord to_local_polar(Point target, const Pose& frame) {
  const double dx = target.x - frame.position.x;
  const double dy = target.y - frame.position.y;
  const double d = std::hypot(dx, dy);
  if (d == 0.0) return {0.0, 0.0};
  return {d, normalize_angle(std::atan2(dy, dx) - frame.heading)};
}

RelEdgeFeature relative_edge(const Pose& src, const Pose& dst, int time_gap, int attr) {
  const PolarCoord pc = to_local_polar(src.position, dst);
  return {pc.dist, pc.angle, normalize_angle(src.heading - dst.heading), time_gap, attr};
}

std::vector<std::size_t> radius_neighbors(std::span<const Point> candidates, Point center, double radius) {
  if (!(radius > 0.0)) throw ArgumentError("radius_neighbors: radius must be positive");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (distance(candidates[i], center) <= radius) out.push_back(i);
  }
  return out;
}

Point Rigid2::apply(Point p) const {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * p.x - s * p.y + offset.x, s * p.x + c * p.y + offset.y};
}

Pose Rigid2::apply(const Pose& p) const { return {apply(p.position), apply_heading(p.heading)}; }

double polyline_length(std::span<const Point> pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
  return len;
}

Pose polyline_reference_pose(std::span<const Point> pts) {
  if (pts.size() < 2) throw DataError("polyline needs at least two points");
  const double total = polyline_length(pts);
  const double half = 0.5 * total;
  // A midpoint on an interior vertex takes the bisector of both chords, so
  // rounding cannot pick one side or the other.
  const double snap = 1e-9 * total;
  auto unit = [&](std::size_t i) {
    const double dx = pts[i].x - pts[i - 1].x, dy = pts[i].y - pts[i - 1].y;
    const double n = std::hypot(dx, dy);
    return n > 0.0 ? Point{dx / n, dy / n} : Point{};
  };
  double acc = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double seg = distance(pts[i - 1], pts[i]);
    if (i + 1 < pts.size() && std::abs(acc + seg - half) <= snap) {
      const Point a = unit(i), b = unit(i + 1);
      if (std::hypot(a.x + b.x, a.y + b.y) > 1e-9) {
        return {pts[i], normalize_angle(std::atan2(a.y + b.y, a.x + b.x))};
      }
    }
    if (acc + seg >= half || i + 1 == pts.size()) {
      const double u = seg > 0.0 ? std::clamp((half - acc) / seg, 0.0, 1.0) : 0.0;
      const Point mid{pts[i - 1].x + u * (pts[i].x - pts[i - 1].x), pts[i - 1].y + u * (pts[i].y - pts[i - 1].y)};
      return {mid, normalize_angle(std::atan2(pts[i].y - pts[i - 1].y, pts[i].x - pts[i - 1].x))};
    }
    acc += seg;
  }
  return {pts.front(), 0.0};
}

}  // namespace ilnet::geo
