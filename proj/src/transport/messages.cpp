#include "hapcompass/transport/messages.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "hapcompass/haptics/condition.hpp"

namespace hapcompass::transport {

namespace {

constexpr std::array<std::string_view, 8> kKnownKinds{kinds::hand_pose,       kinds::sensor_frame,
                                                      kinds::haptic_cmd,      kinds::device_telemetry,
                                                      kinds::episode_event,   kinds::latency_probe,
                                                      kinds::action,          kinds::episode_meta};

const json& field(const json& p, const char* key) {
  if (!p.is_object()) throw std::invalid_argument("payload is not an object");
  const auto it = p.find(key);
  if (it == p.end()) throw std::invalid_argument(std::string("payload missing '") + key + "'");
  return *it;
}

double number(const json& p, const char* key) {
  const json& v = field(p, key);
  if (!v.is_number()) throw std::invalid_argument(std::string("payload field '") + key + "' is not a number");
  return v.get<double>();
}

template <typename Tag>
json vec(const Vector3<Tag>& v) {
  return json::array({v.x, v.y, v.z});
}

template <typename Tag>
Vector3<Tag> vec_from(const json& p, const char* key) {
  const json& v = field(p, key);
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number()) {
    throw std::invalid_argument(std::string("payload field '") + key + "' is not a 3-vector");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

}  // namespace

bool is_known_kind(std::string_view kind) {
  for (auto k : kKnownKinds) {
    if (k == kind) return true;
  }
  return false;
}

std::int64_t to_micros(double seconds) { return std::llround(seconds * 1e6); }

void HandPoseMsg::validate() const {
  if (!position.finite() || !std::isfinite(grip)) throw std::invalid_argument("hand pose must be finite");
  if (grip < 0.0 || grip > 1.0) throw std::invalid_argument("hand pose grip must be in [0, 1]");
}

json to_payload(const HandPoseMsg& m) { return {{"position", vec(m.position)}, {"grip", m.grip}}; }

json to_payload(const SensorFrame& f) {
  return {{"t", f.t},
          {"tactile", vec(f.tactile)},
          {"force", vec(f.wrench.force)},
          {"torque", vec(f.wrench.torque)},
          {"ee", vec(f.ee_position)}};
}

json to_payload(const haptics::HapticCommand& c) { return {{"theta", c.theta}, {"amplitude", c.amplitude}}; }

json to_payload(const DeviceTelemetryMsg& m) {
  return {{"t", m.t},
          {"realized_angle", m.realized_angle},
          {"target_angle", m.target_angle},
          {"amplitude", m.amplitude},
          {"polarity", m.polarity}};
}

json to_payload(const EpisodeEventMsg& m) { return {{"t", m.t}, {"event", m.event}, {"detail", m.detail}}; }

json to_payload(const LatencyProbeMsg& m) {
  json p{{"id", m.id}, {"t_client", m.t_client}};
  if (m.t_server) p["t_server"] = *m.t_server;
  return p;
}

json to_payload(const ActionMsg& m) { return {{"t", m.t}, {"delta", vec(m.delta)}}; }

json to_payload(const EpisodeMetaMsg& m) {
  return {{"task", std::string(sim::to_string(m.meta.task))},
          {"condition", std::string(haptics::to_string(m.meta.condition))},
          {"seed", m.meta.seed},
          {"config", m.config}};
}

HandPoseMsg hand_pose_from(const json& p) {
  HandPoseMsg m{vec_from<LengthTag>(p, "position"), number(p, "grip")};
  m.validate();
  return m;
}

SensorFrame sensor_frame_from(const json& p) {
  SensorFrame f;
  f.t = number(p, "t");
  f.tactile = vec_from<ForceTag>(p, "tactile");
  f.wrench.force = vec_from<ForceTag>(p, "force");
  f.wrench.torque = vec_from<TorqueTag>(p, "torque");
  f.ee_position = vec_from<LengthTag>(p, "ee");
  return f;
}

haptics::HapticCommand haptic_cmd_from(const json& p) { return {number(p, "theta"), number(p, "amplitude")}; }

DeviceTelemetryMsg device_telemetry_from(const json& p) {
  const json& pol = field(p, "polarity");
  if (!pol.is_number_integer()) throw std::invalid_argument("telemetry polarity must be an integer");
  return {number(p, "t"), number(p, "realized_angle"), number(p, "target_angle"), number(p, "amplitude"),
          pol.get<int>()};
}

EpisodeEventMsg episode_event_from(const json& p) {
  const json& ev = field(p, "event");
  if (!ev.is_string()) throw std::invalid_argument("episode event name must be a string");
  EpisodeEventMsg m{number(p, "t"), ev.get<std::string>(), json::object()};
  if (const auto it = p.find("detail"); it != p.end()) m.detail = *it;
  return m;
}

LatencyProbeMsg latency_probe_from(const json& p) {
  const json& id = field(p, "id");
  const json& tc = field(p, "t_client");
  if (!id.is_number_unsigned() || !tc.is_number_integer()) throw std::invalid_argument("latency probe ids and clocks are integers");
  LatencyProbeMsg m{id.get<std::uint64_t>(), tc.get<std::int64_t>(), std::nullopt};
  if (const auto it = p.find("t_server"); it != p.end()) {
    if (!it->is_number_integer()) throw std::invalid_argument("latency probe t_server must be an integer");
    m.t_server = it->get<std::int64_t>();
  }
  return m;
}

ActionMsg action_from(const json& p) { return {number(p, "t"), vec_from<LengthTag>(p, "delta")}; }

EpisodeMetaMsg episode_meta_from(const json& p) {
  const json& task = field(p, "task");
  const json& cond = field(p, "condition");
  const json& seed = field(p, "seed");
  if (!task.is_string() || !cond.is_string() || !seed.is_number_unsigned()) {
    throw std::invalid_argument("episode meta fields have the wrong types");
  }
  EpisodeMetaMsg m;
  m.meta.task = sim::parse_task_kind(task.get<std::string>());
  m.meta.condition = haptics::parse_condition(cond.get<std::string>());
  m.meta.seed = seed.get<std::uint64_t>();
  if (const auto it = p.find("config"); it != p.end()) m.config = *it;
  return m;
}

}  // namespace hapcompass::transport
