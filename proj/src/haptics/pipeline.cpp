#include "hapcompass/haptics/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hapcompass/core/errors.hpp"

namespace hapcompass::haptics {

HapticCue make_cue(double theta, double amplitude) {
  return {wrap_angle(theta), std::clamp(amplitude, 0.0, 1.0)};
}

void PipelineConfig::validate() const {
  if (!rotation.is_valid(1e-9)) throw ConfigError("pipeline.rotation must be orthonormal with det +1");
  if (!(gain_k > 0.0) || !std::isfinite(gain_k)) throw ConfigError("pipeline.gain_k must be > 0");
  if (!(contact_threshold > 0.0)) throw ConfigError("pipeline.contact_threshold must be > 0");
  if (!(recal_debounce >= 0.0)) throw ConfigError("pipeline.recal_debounce must be >= 0");
  if (!(amplitude_max > 0.0 && amplitude_max <= 1.0)) throw ConfigError("pipeline.amplitude_max must be in (0, 1]");
  if (!(deadband >= 0.0)) throw ConfigError("pipeline.deadband must be >= 0");
}

Force3 transform_force(const Force3& delta_f, const Rotation3& r) { return r * delta_f; }

Force2 project_to_plane(const Force3& f_device) { return {f_device.x, f_device.y}; }

HapticCue compute_cue(const Force2& f2d, const PipelineConfig& cfg, const HapticCue& prev) {
  const double magnitude = f2d.norm();
  if (magnitude < cfg.deadband) return {prev.theta, 0.0};
  const double amplitude = std::min(cfg.gain_k * magnitude, cfg.amplitude_max);
  return make_cue(std::atan2(f2d.fy, f2d.fx), amplitude);
}

BaselineState update_baseline(const BaselineState& state, const Wrench& wrench, const Force3& tactile, double now,
                              const PipelineConfig& cfg) {
  if (state.last_update && now < *state.last_update) {
    throw MonotonicityError("baseline update at t=" + std::to_string(now) + " precedes previous t=" +
                            std::to_string(*state.last_update));
  }
  BaselineState next = state;
  next.last_update = now;
  if (wrench.force.norm() < cfg.contact_threshold) {
    if (!next.below_threshold_since) next.below_threshold_since = now;
    if (now - *next.below_threshold_since >= cfg.recal_debounce) next.baseline = tactile;
  } else {
    next.below_threshold_since.reset();
  }
  return next;
}

Force3 compute_delta(const Force3& tactile, const BaselineState& state) { return tactile - state.baseline; }

std::pair<BaselineState, HapticCue> pipeline_step(const BaselineState& state, const SensorFrame& frame,
                                                  const PipelineConfig& cfg) {
  BaselineState next = update_baseline(state, frame.wrench, frame.tactile, frame.t, cfg);
  const Force3 delta = compute_delta(frame.tactile, next);
  const Force2 f2d = project_to_plane(transform_force(delta, cfg.rotation));
  const HapticCue cue = compute_cue(f2d, cfg, HapticCue{state.last_cue_theta, 0.0});
  next.last_cue_theta = cue.theta;
  return {next, cue};
}

TactileMapper::TactileMapper(PipelineConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

HapticCue TactileMapper::step(const SensorFrame& frame) {
  auto [next, cue] = pipeline_step(state_, frame, cfg_);
  state_ = next;
  last_delta_ = compute_delta(frame.tactile, state_);
  return cue;
}

}  // namespace hapcompass::haptics
