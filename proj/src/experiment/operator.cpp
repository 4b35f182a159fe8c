#include "hapcompass/experiment/operator.hpp"

#include <algorithm>
#include <cmath>

#include "hapcompass/core/errors.hpp"

namespace hapcompass::experiment {

void OperatorConfig::validate() const {
  const double lengths[] = {visual_bias_std, tremor_std, retry_spread, direction_noise};
  for (double v : lengths) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("operator noise terms must be finite and >= 0");
  }
  const double positives[] = {approach_speed, descent_speed, hover_height, correction_speed, retry_lift};
  for (double v : positives) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("operator speeds and heights must be finite and > 0");
  }
  if (max_retries < 0) throw ConfigError("operator.max_retries must be >= 0");
  if (!(overshoot >= 0.0)) throw ConfigError("operator.overshoot must be >= 0");
  if (!(stable_tracking_factor > 0.0 && stable_tracking_factor <= 1.0)) {
    throw ConfigError("operator.stable_tracking_factor must be in (0, 1]");
  }
  if (!(lateral_cue_threshold > 0.0) || !(force_limit_cue > 0.0)) {
    throw ConfigError("operator cue thresholds must be > 0");
  }
}

OperatorView view_of(const transport::TickOutput& out) {
  return {out.frame.t, out.frame.ee_position, out.device.realized_angle, out.device.amplitude};
}

ScriptedOperator::ScriptedOperator(OperatorConfig cfg, const transport::SessionConfig& session, std::uint64_t seed)
    : cfg_((cfg.validate(), cfg)),
      condition_(session.condition),
      rotation_(session.task.fingertip_rotation * session.pipeline.rotation.transpose()),
      goal_depth_(session.task.insertion_depth_goal),
      dt_(session.tick_dt),
      rng_(seed) {
  hole_ = {rng_.normal() * cfg_.visual_bias_std, rng_.normal() * cfg_.visual_bias_std, 0.0};
  aim_ = hole_;
  const bool steadier = condition_ == haptics::Condition::controller_vibration && cfg_.stable_tracking;
  approach_height_ = cfg_.hover_height;
  tremor_ = cfg_.tremor_std * (steadier ? cfg_.stable_tracking_factor : 1.0);
}

Position3 ScriptedOperator::track(const Position3& target, double speed, double dt) {
  intent_ += sim::clamp_step(target - intent_, speed * dt);
  return intent_;
}

Position3 ScriptedOperator::act(const OperatorView& view) {
  if (!intent_set_) {
    intent_ = view.ee_position;
    intent_set_ = true;
  }
  const double floor_z = -(goal_depth_ + cfg_.overshoot);
  const bool in_contact_phase = phase_ == Phase::descend || phase_ == Phase::hold;

  bool pause = false;
  if (in_contact_phase && condition_ == haptics::Condition::directional && view.amplitude > 0.0) {
    // Rendered direction back into the task frame through the known mapping.
    const double theta = view.rendered_angle + rng_.normal() * cfg_.direction_noise;
    const Position3 felt = rotation_ * Position3{std::cos(theta), std::sin(theta), 0.0};
    const double lateral = std::hypot(felt.x, felt.y) * view.amplitude;
    if (lateral > cfg_.lateral_cue_threshold) {
      const Position3 away{-felt.x, -felt.y, 0.0};
      aim_ += away * (cfg_.correction_speed * dt_ / away.norm());
      pause = true;
    }
  } else if (in_contact_phase && condition_ != haptics::Condition::vision_only &&
             view.amplitude > cfg_.force_limit_cue && retries_ < cfg_.max_retries) {
    ++retries_;
    aim_ = hole_ + Position3{rng_.uniform(-1.0, 1.0), rng_.uniform(-1.0, 1.0), 0.0} * cfg_.retry_spread;
    back_off_z_ = std::max(intent_.z, 0.0) + cfg_.retry_lift;
    phase_ = Phase::back_off;
  }

  switch (phase_) {
    case Phase::approach: {
      const Position3 target = aim_ + Position3{0.0, 0.0, approach_height_};
      if ((track(target, cfg_.approach_speed, dt_) - target).norm() < 1e-9) phase_ = Phase::descend;
      break;
    }
    case Phase::descend: {
      const double z = pause ? intent_.z : std::max(floor_z, intent_.z - cfg_.descent_speed * dt_);
      track({aim_.x, aim_.y, z}, cfg_.approach_speed, dt_);
      if (intent_.z <= floor_z) phase_ = Phase::hold;
      break;
    }
    case Phase::back_off: {
      const Position3 target{intent_.x, intent_.y, back_off_z_};
      if ((track(target, cfg_.approach_speed, dt_) - target).norm() < 1e-9) {
        approach_height_ = cfg_.retry_lift;
        phase_ = Phase::approach;
      }
      break;
    }
    case Phase::hold:
      track({aim_.x, aim_.y, intent_.z}, cfg_.approach_speed, dt_);
      break;
  }

  const Position3 shaky = intent_ + Position3{rng_.normal(), rng_.normal(), rng_.normal()} * tremor_;
  return shaky - view.ee_position;
}

}  // namespace hapcompass::experiment
