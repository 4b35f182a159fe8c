#include "hapcompass/metrics/episode_log.hpp"

#include <stdexcept>
#include <string>

namespace hapcompass::metrics {

std::string_view to_string(EpisodeEventKind kind) {
  switch (kind) {
    case EpisodeEventKind::success: return "success";
    case EpisodeEventKind::fracture: return "fracture";
    case EpisodeEventKind::timeout: return "timeout";
    case EpisodeEventKind::aborted: return "aborted";
  }
  return "unknown";
}

EpisodeEventKind parse_episode_event(std::string_view name) {
  for (auto k : {EpisodeEventKind::success, EpisodeEventKind::fracture, EpisodeEventKind::timeout,
                 EpisodeEventKind::aborted}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown episode event '" + std::string(name) + "'");
}

std::optional<EpisodeEvent> EpisodeLog::terminal_event() const {
  if (events.empty()) return std::nullopt;
  return events.front();
}

void EpisodeLog::validate() const {
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (!(frames[i].t > frames[i - 1].t)) {
      throw std::invalid_argument("episode log frame " + std::to_string(i) + " does not advance time");
    }
  }
  if (events.size() > 1) throw std::invalid_argument("episode log has more than one terminal event");
}

}  // namespace hapcompass::metrics
