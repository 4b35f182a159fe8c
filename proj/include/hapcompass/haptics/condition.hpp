#pragma once

#include <string_view>

#include "hapcompass/haptics/pipeline.hpp"

namespace hapcompass::haptics {

/// Feedback modality of an episode.
enum class Condition {
  vision_only,           // C1: no cues
  device_vibration,      // C2: amplitude only, direction frozen
  controller_vibration,  // C3: amplitude only, direction frozen
  directional,           // C4: full cue
};

std::string_view to_string(Condition c);
/// Accepts "C1".."C4" (case-insensitive). Throws ConfigError otherwise.
Condition parse_condition(std::string_view tag);

/// What the operator actually receives under condition `c`.
HapticCue gate_cue(const HapticCue& cue, Condition c);

}  // namespace hapcompass::haptics
