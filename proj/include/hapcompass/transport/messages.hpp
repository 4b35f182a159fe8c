#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "hapcompass/core/frames.hpp"
#include "hapcompass/core/units.hpp"
#include "hapcompass/haptics/pipeline.hpp"
#include "hapcompass/metrics/episode_log.hpp"

namespace hapcompass::transport {

using json = nlohmann::json;

namespace kinds {
inline constexpr std::string_view hand_pose = "hand_pose";
inline constexpr std::string_view sensor_frame = "sensor_frame";
inline constexpr std::string_view haptic_cmd = "haptic_cmd";
inline constexpr std::string_view device_telemetry = "device_telemetry";
inline constexpr std::string_view episode_event = "episode_event";
inline constexpr std::string_view latency_probe = "latency_probe";
// log-only records
inline constexpr std::string_view action = "action";
inline constexpr std::string_view episode_meta = "episode_meta";
}  // namespace kinds

bool is_known_kind(std::string_view kind);

/// One message on the wire. Unknown kinds keep their payload untouched.
struct Envelope {
  std::uint64_t seq = 0;
  std::int64_t t_send = 0;  // µs
  std::string kind;
  json payload = json::object();

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

/// Seconds to the integer microsecond timestamp used on the wire.
std::int64_t to_micros(double seconds);

struct HandPoseMsg {
  Position3 position;
  double grip = 0.0;

  /// Throws std::invalid_argument on non-finite values or grip outside [0, 1].
  void validate() const;
  friend constexpr bool operator==(const HandPoseMsg&, const HandPoseMsg&) = default;
};

struct DeviceTelemetryMsg {
  double t = 0.0;
  double realized_angle = 0.0;
  double target_angle = 0.0;
  double amplitude = 0.0;
  int polarity = 1;

  friend constexpr bool operator==(const DeviceTelemetryMsg&, const DeviceTelemetryMsg&) = default;
};

/// Terminal episode events plus transport diagnostics ("seq_gap", "started").
struct EpisodeEventMsg {
  double t = 0.0;
  std::string event;
  json detail = json::object();

  friend bool operator==(const EpisodeEventMsg&, const EpisodeEventMsg&) = default;
};

struct LatencyProbeMsg {
  std::uint64_t id = 0;
  std::int64_t t_client = 0;                // µs on the client's clock
  std::optional<std::int64_t> t_server;     // µs on the service's clock, set on echo

  friend constexpr bool operator==(const LatencyProbeMsg&, const LatencyProbeMsg&) = default;
};

struct ActionMsg {
  double t = 0.0;
  Position3 delta;

  friend constexpr bool operator==(const ActionMsg&, const ActionMsg&) = default;
};

struct EpisodeMetaMsg {
  metrics::EpisodeMeta meta;
  json config = json::object();

  friend bool operator==(const EpisodeMetaMsg&, const EpisodeMetaMsg&) = default;
};

// Payload mapping. The readers throw std::invalid_argument on schema errors.
json to_payload(const HandPoseMsg& m);
json to_payload(const SensorFrame& f);
json to_payload(const haptics::HapticCommand& c);
json to_payload(const DeviceTelemetryMsg& m);
json to_payload(const EpisodeEventMsg& m);
json to_payload(const LatencyProbeMsg& m);
json to_payload(const ActionMsg& m);
json to_payload(const EpisodeMetaMsg& m);

HandPoseMsg hand_pose_from(const json& p);
SensorFrame sensor_frame_from(const json& p);
haptics::HapticCommand haptic_cmd_from(const json& p);
DeviceTelemetryMsg device_telemetry_from(const json& p);
EpisodeEventMsg episode_event_from(const json& p);
LatencyProbeMsg latency_probe_from(const json& p);
ActionMsg action_from(const json& p);
EpisodeMetaMsg episode_meta_from(const json& p);

}  // namespace hapcompass::transport
