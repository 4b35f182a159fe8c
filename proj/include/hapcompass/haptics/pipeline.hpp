#pragma once

#include <optional>
#include <utility>

#include "hapcompass/core/frames.hpp"
#include "hapcompass/core/units.hpp"

namespace hapcompass::haptics {

/// Target rotor direction and vibration drive level sent to the device.
/// theta is kept in [−π, π), amplitude in [0, 1].
struct HapticCue {
  double theta = 0.0;
  double amplitude = 0.0;

  friend constexpr bool operator==(const HapticCue&, const HapticCue&) = default;
};

using HapticCommand = HapticCue;

/// Builds a cue with theta wrapped and amplitude clamped.
HapticCue make_cue(double theta, double amplitude);

struct BaselineState {
  Force3 baseline;
  std::optional<double> below_threshold_since;
  double last_cue_theta = 0.0;
  std::optional<double> last_update;

  friend bool operator==(const BaselineState&, const BaselineState&) = default;
};

struct PipelineConfig {
  Rotation3 rotation;               // sensor frame -> device frame
  double gain_k = 0.02;             // 1/N
  double contact_threshold = 2.0;   // N, on |wrench.force|
  double recal_debounce = 0.2;      // s continuously below threshold
  double amplitude_max = 1.0;
  double deadband = 0.05;           // N, on |f2d|

  /// Throws ConfigError on a non-rotation or non-positive parameter.
  void validate() const;
};

Force3 transform_force(const Force3& delta_f, const Rotation3& r);

/// Drops the device-frame z component; the feedback plane is device x–y.
Force2 project_to_plane(const Force3& f_device);

/// theta = atan2(fy, fx), amplitude = min(k·|f2d|, amplitude_max). Below the
/// deadband the previous direction is held and the drive is silenced.
HapticCue compute_cue(const Force2& f2d, const PipelineConfig& cfg, const HapticCue& prev);

/// Snaps the tactile baseline to the current reading once the wrist force has
/// stayed under the contact threshold for the debounce interval. Throws
/// MonotonicityError if `now` precedes the previous update.
BaselineState update_baseline(const BaselineState& state, const Wrench& wrench, const Force3& tactile, double now,
                              const PipelineConfig& cfg);

Force3 compute_delta(const Force3& tactile, const BaselineState& state);

/// update_baseline -> compute_delta -> transform_force -> project_to_plane ->
/// compute_cue.
std::pair<BaselineState, HapticCue> pipeline_step(const BaselineState& state, const SensorFrame& frame,
                                                  const PipelineConfig& cfg);

/// Stateful wrapper owning one pipeline instance. Single writer.
class TactileMapper {
 public:
  explicit TactileMapper(PipelineConfig cfg);

  HapticCue step(const SensorFrame& frame);

  /// ΔF of the most recent frame, in the sensor frame.
  const Force3& last_delta() const { return last_delta_; }
  const BaselineState& state() const { return state_; }
  const PipelineConfig& config() const { return cfg_; }

 private:
  PipelineConfig cfg_;
  BaselineState state_;
  Force3 last_delta_;
};

}  // namespace hapcompass::haptics
