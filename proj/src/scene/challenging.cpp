#include "ilnet/scene/challenging.hpp"

#include <algorithm>

#include "ilnet/errors.hpp"

namespace ilnet::scene {
namespace {

const AgentTrack& focal_track(const Scenario& s) {
  const auto idx = s.agent_index(s.focal_ids.at(0));
  if (!idx) throw DataError("scenario " + s.id + ": focal agent missing");
  return s.agents[*idx];
}

}  // namespace

double constant_velocity_fde(const Scenario& s) {
  const AgentTrack& track = focal_track(s);
  const auto rollout = constant_velocity_rollout(track, s.history, s.future, s.dt());
  return geo::distance(rollout.back(), track.states.back().position);
}

int interaction_steps(const Scenario& s) {
  const AgentTrack& focal = focal_track(s);
  int best = 0;
  for (const auto& other : s.agents) {
    if (other.id == focal.id) continue;
    int count = 0;
    for (std::size_t t = 0; t < focal.states.size(); ++t) {
      if (geo::distance(focal.states[t].position, other.states[t].position) <= kInteractionDistance) ++count;
    }
    best = std::max(best, count);
  }
  return best;
}

bool is_challenging(const Scenario& s, const ChallengeCriteria& c) {
  if (s.kind != ScenarioKind::kIntersection) return false;
  if (!(constant_velocity_fde(s) > c.min_cv_fde)) return false;
  if (interaction_steps(s) < c.min_interaction_steps) return false;
  return absolute_turn_angle_deg(focal_track(s), s.history) >= c.min_turn_deg;
}

std::vector<std::size_t> select_challenging(const std::vector<Scenario>& scenarios, const ChallengeCriteria& c) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (is_challenging(scenarios[i], c)) out.push_back(i);
  }
  return out;
}

}  // namespace ilnet::scene
