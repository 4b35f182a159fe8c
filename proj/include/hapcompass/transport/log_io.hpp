#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "hapcompass/metrics/episode_log.hpp"
#include "hapcompass/transport/messages.hpp"

namespace hapcompass::transport {

/// The envelope sequence an episode log is stored as: episode_meta first,
/// then per frame a sensor_frame and haptic_cmd followed by the action that
/// led to the next frame, and finally any episode_event. t_send is the
/// simulation clock in µs, so identical episodes give identical bytes.
std::vector<Envelope> log_to_envelopes(const metrics::EpisodeLog& log, const json& config);

struct LoadedLog {
  metrics::EpisodeLog log;
  json config;
};

/// Rebuilds a log from its envelopes. Unknown kinds are skipped; a missing
/// episode_meta or malformed payload throws std::invalid_argument.
LoadedLog log_from_envelopes(std::span<const Envelope> envelopes);

/// NDJSON files, gzip-compressed when the path ends in ".gz". Reading
/// accepts either form. I/O failures throw std::runtime_error; malformed
/// lines throw DecodeError.
void write_envelopes(const std::filesystem::path& path, std::span<const Envelope> envelopes);
std::vector<Envelope> read_envelopes(const std::filesystem::path& path);

void write_episode_log(const std::filesystem::path& path, const metrics::EpisodeLog& log, const json& config);
LoadedLog read_episode_log(const std::filesystem::path& path);

}  // namespace hapcompass::transport
