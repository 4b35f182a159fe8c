#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "hapcompass/core/frames.hpp"
#include "hapcompass/haptics/condition.hpp"
#include "hapcompass/haptics/pipeline.hpp"
#include "hapcompass/sim/contact_sim.hpp"

namespace hapcompass::metrics {

/// Every episode event ends the episode.
enum class EpisodeEventKind { success, fracture, timeout, aborted };

std::string_view to_string(EpisodeEventKind kind);
EpisodeEventKind parse_episode_event(std::string_view name);

struct EpisodeEvent {
  double t = 0.0;
  EpisodeEventKind kind = EpisodeEventKind::success;

  friend constexpr bool operator==(const EpisodeEvent&, const EpisodeEvent&) = default;
};

struct EpisodeMeta {
  sim::TaskKind task = sim::TaskKind::key_insertion;
  haptics::Condition condition = haptics::Condition::directional;
  std::uint64_t seed = 0;

  friend constexpr bool operator==(const EpisodeMeta&, const EpisodeMeta&) = default;
};

/// Append-only record of one episode. frames[0] is the initial observation;
/// actions[i] produced frames[i + 1]; cues[i] was rendered from frames[i].
struct EpisodeLog {
  EpisodeMeta meta;
  std::vector<SensorFrame> frames;
  std::vector<Position3> actions;
  std::vector<haptics::HapticCue> cues;
  std::vector<EpisodeEvent> events;

  std::optional<EpisodeEvent> terminal_event() const;

  /// Throws std::invalid_argument on non-increasing timestamps or more than
  /// one terminal event.
  void validate() const;

  friend bool operator==(const EpisodeLog&, const EpisodeLog&) = default;
};

}  // namespace hapcompass::metrics
