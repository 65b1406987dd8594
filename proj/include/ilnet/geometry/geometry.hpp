#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ilnet::geo {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

/// Position in the global frame (meters) and heading in (-pi, pi].
struct Pose {
  Point position;
  double heading = 0.0;
};

/// Maps an angle to (-pi, pi]. Idempotent.
double normalize_angle(double a);

double distance(Point a, Point b);

struct PolarCoord {
  double dist = 0.0;
  double angle = 0.0;
};

/// Displacement of `target` expressed in `frame`'s axes.
Point to_local(Point target, const Pose& frame);
Point to_global(Point local, const Pose& frame);
/// Distance and bearing of `target` seen from `frame`. Coincident points give (0, 0).
PolarCoord to_local_polar(Point target, const Pose& frame);

/// Relation of a source node to a destination node, measured in the
/// destination's local frame.
struct RelEdgeFeature {
  double dist = 0.0;         ///< meters
  double edge_dir = 0.0;     ///< bearing of the source in the destination frame
  double rel_heading = 0.0;  ///< source heading minus destination heading
  int time_gap = 0;          ///< timestamps between the nodes, 0 for same-time edges
  int attr = 0;              ///< relation attribute code (polyline kind, lane link type, ...)
};

RelEdgeFeature relative_edge(const Pose& src, const Pose& dst, int time_gap, int attr);

/// Indices of candidates within `radius` of `center` (boundary inclusive), ascending.
std::vector<std::size_t> radius_neighbors(std::span<const Point> candidates, Point center, double radius);

/// Rigid planar transform: rotate by `angle`, then translate by `offset`.
struct Rigid2 {
  double angle = 0.0;
  Point offset;

  Point apply(Point p) const;
  Pose apply(const Pose& p) const;
  double apply_heading(double h) const { return normalize_angle(h + angle); }
};

double polyline_length(std::span<const Point> pts);
/// Point at half arc length with the direction of the chord that contains it
/// (the bisector of both chords when that point is a vertex).
Pose polyline_reference_pose(std::span<const Point> pts);

}  // namespace ilnet::geo
