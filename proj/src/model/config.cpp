#include "ilnet/model/config.hpp"

#include <algorithm>
#include <sstream>

#include "ilnet/errors.hpp"

namespace ilnet::model {

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be >= 1, got " + std::to_string(v));
  };
  positive(history, "history");
  positive(future, "future");
  positive(modes, "modes");
  positive(dim, "dim");
  positive(heads, "heads");
  positive(recurrences, "recurrences");
  if (history < 2) throw ConfigError("history must be >= 2");
  if (dim % heads != 0) throw ConfigError("dim (" + std::to_string(dim) + ") must be divisible by heads (" + std::to_string(heads) + ")");
  for (auto [v, name] : {std::pair{map_radius, "map_radius"}, std::pair{future_radius, "future_radius"},
                         std::pair{history_radius, "history_radius"}, std::pair{agent_radius, "agent_radius"},
                         std::pair{refine_radius, "refine_radius"}, std::pair{huber_delta, "huber_delta"}}) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  }
  if (anchor_mode == AnchorMode::kDynamic && future < history && das_strict_shapes) {
    throw ConfigError("dynamic anchors need future >= history (got future=" + std::to_string(future) +
                      ", history=" + std::to_string(history) + ") while das_strict_shapes is set");
  }
}

int ModelConfig::das_kernel() const { return std::min(history, future); }

std::string ModelConfig::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << "history=" << history << ";future=" << future << ";modes=" << modes << ";dim=" << dim << ";heads=" << heads
     << ";recurrences=" << recurrences << ";map_radius=" << map_radius << ";future_radius=" << future_radius
     << ";history_radius=" << history_radius << ";agent_radius=" << agent_radius << ";refine_radius=" << refine_radius
     << ";il_order=" << il_order_name(il_order) << ";disable_fa=" << disable_fa << ";disable_ha=" << disable_ha
     << ";das_mode=" << anchor_mode_name(anchor_mode) << ";das_strict_shapes=" << das_strict_shapes
     << ";huber_delta=" << huber_delta;
  return os.str();
}

const char* il_order_name(IlOrder order) { return order == IlOrder::kInverse ? "inverse" : "forward"; }

IlOrder il_order_from_name(const std::string& name) {
  if (name == "inverse") return IlOrder::kInverse;
  if (name == "forward") return IlOrder::kForward;
  throw ConfigError("il_order must be 'inverse' or 'forward', got '" + name + "'");
}

const char* anchor_mode_name(AnchorMode mode) { return mode == AnchorMode::kDynamic ? "dynamic" : "midpoint"; }

AnchorMode anchor_mode_from_name(const std::string& name) {
  if (name == "dynamic") return AnchorMode::kDynamic;
  if (name == "midpoint") return AnchorMode::kMidpoint;
  throw ConfigError("das_mode must be 'dynamic' or 'midpoint', got '" + name + "'");
}

}  // namespace ilnet::model
