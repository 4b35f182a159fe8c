#pragma once

#include "hapcompass/core/units.hpp"

namespace hapcompass {

/// One tick of the feedback path: fingertip tactile force, wrist wrench and
/// end-effector (tool tip) position.
struct SensorFrame {
  double t = 0.0;   // s, monotonic episode clock
  Force3 tactile;   // N, net fingertip force in the fingertip frame
  Wrench wrench;    // F/T sensor frame
  Position3 ee_position;

  bool finite() const { return std::isfinite(t) && tactile.finite() && wrench.finite() && ee_position.finite(); }
  friend constexpr bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

}  // namespace hapcompass
