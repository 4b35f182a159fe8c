#pragma once

#include <cstdint>
#include <optional>

#include "hapcompass/device/device_model.hpp"
#include "hapcompass/haptics/condition.hpp"
#include "hapcompass/haptics/pipeline.hpp"
#include "hapcompass/metrics/episode_log.hpp"
#include "hapcompass/sim/contact_sim.hpp"
#include "hapcompass/transport/messages.hpp"
#include "hapcompass/transport/retarget.hpp"

namespace hapcompass::transport {

struct SessionConfig {
  sim::TaskConfig task = sim::TaskConfig::preset(sim::TaskKind::key_insertion);
  haptics::PipelineConfig pipeline;
  device::DeviceConfig device;
  haptics::Condition condition = haptics::Condition::directional;
  std::uint64_t seed = 0;
  double tick_dt = 0.02;  // s, 50 Hz
  double retarget_scale = 1.0;

  void validate() const;
};

/// Everything one tick of the node graph produces.
struct TickOutput {
  SensorFrame frame;
  haptics::HapticCue raw_cue;  // pipeline output
  haptics::HapticCue cue;      // after condition gating; what the device renders
  device::DeviceOutput device;
  Position3 action;
  std::optional<metrics::EpisodeEvent> event;
};

/// The node graph in lockstep: retarget -> simulator -> tactile mapping ->
/// condition gating -> device model, appending every tick to the episode log.
/// Single owner; the networked service drives one of these from its tick loop.
class Session {
 public:
  explicit Session(SessionConfig cfg);

  /// Frame, cue and device output at t = 0, before any action.
  const TickOutput& initial() const { return initial_; }

  /// One tick driven by an operator pose; nullopt holds position. Throws
  /// TerminalStateError once the episode has ended.
  const TickOutput& tick(const std::optional<HandPoseMsg>& pose);

  /// One tick driven by a direct end-effector delta (clamped to the step bound).
  const TickOutput& tick_action(const Position3& action);

  /// Ends a running episode with an "aborted" event at the current clock.
  void abort();

  bool finished() const { return !log_.events.empty(); }
  double clock() const { return sim_.clock; }
  const metrics::EpisodeLog& log() const { return log_; }
  const sim::SimState& sim_state() const { return sim_; }
  const haptics::TactileMapper& mapper() const { return mapper_; }
  const SessionConfig& config() const { return cfg_; }

 private:
  void render(TickOutput& out);

  SessionConfig cfg_;
  sim::SimState sim_;
  haptics::TactileMapper mapper_;
  device::DeviceModel device_;
  RetargetState retarget_;
  metrics::EpisodeLog log_;
  TickOutput initial_;
  TickOutput last_;
};

}  // namespace hapcompass::transport
