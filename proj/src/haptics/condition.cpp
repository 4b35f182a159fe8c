#include "hapcompass/haptics/condition.hpp"

#include <string>

#include "hapcompass/core/errors.hpp"

namespace hapcompass::haptics {

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::vision_only: return "C1";
    case Condition::device_vibration: return "C2";
    case Condition::controller_vibration: return "C3";
    case Condition::directional: return "C4";
  }
  return "C?";
}

Condition parse_condition(std::string_view tag) {
  if (tag.size() == 2 && (tag[0] == 'C' || tag[0] == 'c')) {
    switch (tag[1]) {
      case '1': return Condition::vision_only;
      case '2': return Condition::device_vibration;
      case '3': return Condition::controller_vibration;
      case '4': return Condition::directional;
      default: break;
    }
  }
  throw ConfigError("unknown condition '" + std::string(tag) + "' (expected C1..C4)");
}

HapticCue gate_cue(const HapticCue& cue, Condition c) {
  switch (c) {
    case Condition::vision_only: return HapticCue{0.0, 0.0};
    case Condition::device_vibration:
    case Condition::controller_vibration: return HapticCue{0.0, cue.amplitude};
    case Condition::directional: return cue;
  }
  return cue;
}

}  // namespace hapcompass::haptics
