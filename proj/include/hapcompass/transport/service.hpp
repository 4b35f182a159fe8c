#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "hapcompass/metrics/episode_log.hpp"
#include "hapcompass/transport/messages.hpp"
#include "hapcompass/transport/session.hpp"

namespace hapcompass::transport {

/// realtime: fixed-rate ticks, latest pose wins. stepped: one tick per
/// received pose in arrival order, so a recorded pose stream reproduces the
/// lockstep schedule exactly.
enum class ClockMode { realtime, stepped };

ClockMode parse_clock_mode(std::string_view name);
std::string_view to_string(ClockMode mode);

struct ServiceConfig {
  SessionConfig session;
  std::string bind_address = "127.0.0.1";
  std::uint16_t tcp_port = 7421;  // 0 picks a free port
  std::uint16_t ws_port = 7422;
  ClockMode clock = ClockMode::realtime;
  std::filesystem::path ui_dir;    // served under /ui on the web-socket port
  std::filesystem::path log_path;  // empty: keep the log in memory only
  json config = json::object();    // embedded in the log header
  bool handle_signals = false;     // SIGINT/SIGTERM abort the episode
  std::chrono::milliseconds linger{200};
};

struct ServiceStats {
  std::uint64_t ticks = 0;
  std::uint64_t decode_errors = 0;
  std::uint64_t seq_gaps = 0;
  std::uint64_t rejected_poses = 0;
  std::uint64_t probes_echoed = 0;
  std::uint64_t peers = 0;
};

struct ServiceResult {
  metrics::EpisodeLog log;
  ServiceStats stats;
  std::optional<std::filesystem::path> log_path;
};

/// The networked node graph: a TCP endpoint and a web-socket endpoint that
/// carry the same NDJSON envelopes, an ingest loop on the I/O thread and a
/// tick loop that owns the session. Serves exactly one episode.
class Service {
 public:
  explicit Service(ServiceConfig cfg);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds both endpoints and starts the loops. Throws std::runtime_error
  /// when an endpoint cannot be bound.
  void start();

  std::uint16_t tcp_port() const;
  std::uint16_t ws_port() const;

  /// Aborts a running episode; wait() then returns promptly.
  void stop();

  /// Blocks until the episode has ended and the endpoints are closed.
  ServiceResult wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Blocking NDJSON client over TCP with a background reader.
class TcpClient {
 public:
  TcpClient(const std::string& host, std::uint16_t port);
  ~TcpClient();
  TcpClient(const TcpClient&) = delete;
  TcpClient& operator=(const TcpClient&) = delete;

  /// Sends with this client's own per-kind seq counter.
  void send(std::string_view kind, json payload, std::int64_t t_send);
  void send_envelope(const Envelope& e);
  void send_raw(std::string_view bytes);

  /// Next decoded envelope, or nullopt on timeout or once the stream closed.
  std::optional<Envelope> receive(std::chrono::milliseconds timeout);

  bool closed() const;
  std::uint64_t decode_errors() const;
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Microseconds on the process-wide steady clock.
std::int64_t steady_micros();

}  // namespace hapcompass::transport
