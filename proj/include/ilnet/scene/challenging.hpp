#pragma once

#include <vector>

#include "ilnet/scene/scenario.hpp"

namespace ilnet::scene {

struct ChallengeCriteria {
  double min_cv_fde = 5.0;         ///< m, constant-velocity endpoint error must exceed this
  int min_interaction_steps = 25;  ///< steps with another agent within kInteractionDistance
  double min_turn_deg = 10.0;      ///< absolute turn angle of the focal agent
};

inline constexpr double kInteractionDistance = 5.0;

/// Constant-velocity final displacement error of the first focal agent.
double constant_velocity_fde(const Scenario& s);
/// Largest number of steps during which a single other agent stays within
/// kInteractionDistance of the first focal agent.
int interaction_steps(const Scenario& s);
bool is_challenging(const Scenario& s, const ChallengeCriteria& c = {});

/// Indices of the scenarios that satisfy every condition, ascending.
std::vector<std::size_t> select_challenging(const std::vector<Scenario>& scenarios, const ChallengeCriteria& c = {});

}  // namespace ilnet::scene
