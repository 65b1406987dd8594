#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ilnet/geometry/geometry.hpp"

namespace ilnet::scene {

enum class AgentCategory { kVehicle = 0, kPedestrian = 1, kCyclist = 2 };
inline constexpr int kNumCategories = 3;

struct AgentState {
  geo::Point position;
  double heading = 0.0;       ///< rad
  double speed = 0.0;         ///< m/s, >= 0
  double velocity_dir = 0.0;  ///< rad, direction of motion
  /// History slots: visible to the model. Future slots: ground truth labeled.
  bool observed = true;

  bool operator==(const AgentState&) const = default;
};

struct AgentTrack {
  int id = 0;
  AgentCategory category = AgentCategory::kVehicle;
  double length = 4.5;  ///< m
  double width = 1.9;   ///< m
  std::vector<AgentState> states;  ///< history then future, H + F slots

  bool operator==(const AgentTrack&) const = default;
};

enum class PolylineKind { kCenterline = 0, kLeftBoundary = 1, kRightBoundary = 2 };
inline constexpr int kNumPolylineKinds = 3;

struct Polyline {
  PolylineKind kind = PolylineKind::kCenterline;
  std::vector<geo::Point> points;

  bool operator==(const Polyline&) const = default;
};

enum class LaneLinkType { kPredecessor = 0, kSuccessor = 1, kNeighbor = 2 };
inline constexpr int kNumLaneLinkTypes = 3;

struct LaneLink {
  int target_id = 0;
  LaneLinkType type = LaneLinkType::kSuccessor;
  int hops = 1;

  bool operator==(const LaneLink&) const = default;
};

struct LaneSegment {
  int id = 0;
  std::vector<Polyline> polylines;
  std::vector<LaneLink> links;

  const Polyline& centerline() const;
  /// Midpoint of the centerline, oriented along its central chord.
  geo::Pose reference_pose() const;

  bool operator==(const LaneSegment&) const = default;
};

struct LaneGraph {
  std::vector<LaneSegment> segments;

  std::optional<std::size_t> index_of(int id) const;
  /// Throws DataError unless every segment has exactly one centerline of at
  /// least two points and every link targets an existing segment.
  void validate() const;

  bool operator==(const LaneGraph&) const = default;
};

enum class ScenarioKind { kFollow = 0, kIntersection = 1, kMerge = 2, kCurve = 3 };

const char* kind_name(ScenarioKind kind);
ScenarioKind kind_from_name(const std::string& name);

struct Scenario {
  std::string id;
  ScenarioKind kind = ScenarioKind::kFollow;
  double sample_rate_hz = 10.0;
  int history = 10;
  int future = 15;
  std::vector<AgentTrack> agents;
  LaneGraph map;
  std::vector<int> focal_ids;

  double dt() const { return 1.0 / sample_rate_hz; }
  int total_steps() const { return history + future; }
  std::optional<std::size_t> agent_index(int id) const;
  /// Throws DataError when the documented invariants do not hold.
  void validate() const;

  bool operator==(const Scenario&) const = default;
};

/// Applies a rigid transform to every position and heading in the scene.
Scenario transform_scenario(const Scenario& s, const geo::Rigid2& tf);

/// Future trajectory extrapolating the velocity (speed, velocity_dir) of the
/// last observed history state. Throws DataError with fewer than two observed
/// history states.
std::vector<geo::Point> constant_velocity_rollout(const AgentTrack& track, int history, int future, double dt);

/// Angle (degrees, [0, 180]) between the history displacement (first to last
/// observed history position) and the future displacement (last history
/// position to last future position).
double absolute_turn_angle_deg(const AgentTrack& track, int history);

}  // namespace ilnet::scene
