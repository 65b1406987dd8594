#pragma once

#include <string>

#include "ilnet/eval/evaluate.hpp"
#include "ilnet/scene/scenario.hpp"

namespace ilnet::cli {

/// Static SVG of a scene in world coordinates (y up): lanes, observed history
/// (solid), labeled future (dashed), the final trajectories of every focal
/// agent (one <polyline class="prediction"> per mode) and one
/// <circle class="anchor"> per mode centered on the anchor point.
/// Throws DataError when the prediction belongs to another scenario.
std::string render_svg(const scene::Scenario& s, const eval::ScenarioPrediction& prediction);

}  // namespace ilnet::cli
