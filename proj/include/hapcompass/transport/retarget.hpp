#pragma once

#include <optional>

#include "hapcompass/core/units.hpp"
#include "hapcompass/transport/messages.hpp"

namespace hapcompass::transport {

/// Translation-only retargeting; the end-effector keeps a constant
/// orientation relative to the operator's hand.
struct RetargetState {
  double scale = 1.0;
  double max_step = 0.005;  // m, the simulator's per-tick bound
  std::optional<Position3> previous;
};

/// scale·(pose − previous pose), clamped to max_step. The first pose of a
/// session anchors it and yields a zero action.
Position3 retarget(const HandPoseMsg& pose, RetargetState& state);

}  // namespace hapcompass::transport
