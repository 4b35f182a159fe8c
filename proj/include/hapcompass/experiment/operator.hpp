#pragma once

#include <cstdint>

#include "hapcompass/core/rng.hpp"
#include "hapcompass/core/units.hpp"
#include "hapcompass/haptics/condition.hpp"
#include "hapcompass/sim/contact_sim.hpp"
#include "hapcompass/transport/session.hpp"

namespace hapcompass::experiment {

/// Knobs of the scripted stand-in for a teleoperator. Lengths in m, speeds in
/// m/s, angles in rad.
struct OperatorConfig {
  double visual_bias_std = 0.5e-3;     // per-episode error in where the hole appears to be
  double tremor_std = 0.05e-3;         // per-tick pose noise
  double stable_tracking_factor = 0.4; // tremor multiplier under controller_vibration
  bool stable_tracking = true;
  double approach_speed = 20e-3;
  double descent_speed = 5e-3;
  double hover_height = 5e-3;
  double overshoot = 3e-3;
  double direction_noise = deg2rad(10.0);
  double lateral_cue_threshold = 0.04;   // drive level of the sideways component that triggers a correction
  double correction_speed = 2.5e-3;
  double force_limit_cue = 0.15;         // drive level at which an amplitude-only operator backs off
  double retry_lift = 2e-3;
  double retry_spread = 0.6e-3;
  int max_retries = 3;                   // then keeps pushing as if no cue were there

  void validate() const;
};

/// What the operator has to go on at one tick: the arm as seen on camera and
/// the cue the device actually renders.
struct OperatorView {
  double t = 0.0;
  Position3 ee_position;
  double rendered_angle = 0.0;
  double amplitude = 0.0;
};

OperatorView view_of(const transport::TickOutput& out);

/// Visual servoing toward the hole, then a slow descent. How contact is handled
/// depends only on the information the condition lets through:
/// no cue: keep pushing to the intended depth and hold;
/// amplitude only: back off above the force limit and retry from a guessed offset;
/// direction: slide away from the sensed lateral force while pausing the descent.
class ScriptedOperator {
 public:
  ScriptedOperator(OperatorConfig cfg, const transport::SessionConfig& session, std::uint64_t seed);

  /// End-effector delta for the next tick (not yet clamped to the step bound).
  Position3 act(const OperatorView& view);

  const Position3& perceived_hole() const { return hole_; }

 private:
  enum class Phase { approach, descend, back_off, hold };

  Position3 track(const Position3& target, double speed, double dt);

  OperatorConfig cfg_;
  haptics::Condition condition_;
  Rotation3 rotation_;
  double goal_depth_;
  double dt_;
  Rng rng_;
  Position3 hole_;
  Position3 aim_;     // lateral aim point, starts at the perceived hole
  Position3 intent_;  // pose the operator is trying to hold this tick
  bool intent_set_ = false;
  Phase phase_ = Phase::approach;
  double tremor_;
  double approach_height_;
  int retries_ = 0;
  double back_off_z_ = 0.0;
};

}  // namespace hapcompass::experiment
