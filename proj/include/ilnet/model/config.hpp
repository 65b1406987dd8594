#pragma once

#include <string>

namespace ilnet::model {

enum class IlOrder { kInverse, kForward };
enum class AnchorMode { kDynamic, kMidpoint };

/// Architecture hyper-parameters. Values that change parameter shapes or the
/// forward graph are part of the checkpoint fingerprint.
struct ModelConfig {
  int history = 10;
  int future = 15;
  int modes = 6;
  int dim = 32;
  int heads = 4;
  int recurrences = 2;  ///< rounds of factorized attention in the proposal stage
  double map_radius = 50.0;
  double future_radius = 50.0;
  double history_radius = 50.0;
  double agent_radius = 50.0;
  double refine_radius = 20.0;  ///< lanes gathered around each anchor
  IlOrder il_order = IlOrder::kInverse;
  bool disable_fa = false;
  bool disable_ha = false;
  AnchorMode anchor_mode = AnchorMode::kDynamic;
  bool das_strict_shapes = false;
  double huber_delta = 1.0;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  /// Canonical "key=value;..." string of every field.
  std::string fingerprint() const;
  /// Temporal kernel length of the anchor-selection convolutions.
  int das_kernel() const;
};

const char* il_order_name(IlOrder order);
IlOrder il_order_from_name(const std::string& name);
const char* anchor_mode_name(AnchorMode mode);
AnchorMode anchor_mode_from_name(const std::string& name);

}  // namespace ilnet::model
