#include "hapcompass/transport/log_io.hpp"

#include <zlib.h>

#include <memory>
#include <stdexcept>
#include <string>

#include "hapcompass/core/errors.hpp"
#include "hapcompass/transport/codec.hpp"

namespace hapcompass::transport {

namespace {

struct GzCloser {
  void operator()(gzFile f) const { gzclose(f); }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

bool gzipped(const std::filesystem::path& p) { return p.extension() == ".gz"; }

}  // namespace

std::vector<Envelope> log_to_envelopes(const metrics::EpisodeLog& log, const json& config) {
  SeqCounter seq;
  std::vector<Envelope> out;
  auto push = [&](std::string_view kind, double t, json payload) {
    out.push_back({seq.next(kind), to_micros(t), std::string(kind), std::move(payload)});
  };
  const double t0 = log.frames.empty() ? 0.0 : log.frames.front().t;
  push(kinds::episode_meta, t0, to_payload(EpisodeMetaMsg{log.meta, config}));
  for (std::size_t i = 0; i < log.frames.size(); ++i) {
    const SensorFrame& f = log.frames[i];
    push(kinds::sensor_frame, f.t, to_payload(f));
    if (i < log.cues.size()) push(kinds::haptic_cmd, f.t, to_payload(log.cues[i]));
    if (i < log.actions.size()) {
      const double t_next = i + 1 < log.frames.size() ? log.frames[i + 1].t : f.t;
      push(kinds::action, t_next, to_payload(ActionMsg{t_next, log.actions[i]}));
    }
  }
  for (const auto& e : log.events) {
    push(kinds::episode_event, e.t, to_payload(EpisodeEventMsg{e.t, std::string(metrics::to_string(e.kind)), json::object()}));
  }
  return out;
}

LoadedLog log_from_envelopes(std::span<const Envelope> envelopes) {
  LoadedLog out;
  bool have_meta = false;
  for (const auto& e : envelopes) {
    if (e.kind == kinds::episode_meta) {
      EpisodeMetaMsg m = episode_meta_from(e.payload);
      out.log.meta = m.meta;
      out.config = std::move(m.config);
      have_meta = true;
    } else if (e.kind == kinds::sensor_frame) {
      out.log.frames.push_back(sensor_frame_from(e.payload));
    } else if (e.kind == kinds::haptic_cmd) {
      out.log.cues.push_back(haptic_cmd_from(e.payload));
    } else if (e.kind == kinds::action) {
      out.log.actions.push_back(action_from(e.payload).delta);
    } else if (e.kind == kinds::episode_event) {
      const EpisodeEventMsg m = episode_event_from(e.payload);
      out.log.events.push_back({m.t, metrics::parse_episode_event(m.event)});
    }
  }
  if (!have_meta) throw std::invalid_argument("episode log has no episode_meta record");
  return out;
}

void write_envelopes(const std::filesystem::path& path, std::span<const Envelope> envelopes) {
  std::string text;
  for (const auto& e : envelopes) text += encode(e);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  GzHandle f(gzopen(path.c_str(), gzipped(path) ? "wb9" : "wbT"));
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (!text.empty() && gzwrite(f.get(), text.data(), static_cast<unsigned>(text.size())) != static_cast<int>(text.size())) {
    throw std::runtime_error("short write to " + path.string());
  }
  if (gzclose(f.release()) != Z_OK) throw std::runtime_error("failed to finish " + path.string());
}

std::vector<Envelope> read_envelopes(const std::filesystem::path& path) {
  GzHandle f(gzopen(path.c_str(), "rb"));
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::string text;
  char buf[1 << 15];
  int n = 0;
  while ((n = gzread(f.get(), buf, sizeof buf)) > 0) text.append(buf, static_cast<std::size_t>(n));
  if (n < 0) throw std::runtime_error("corrupt compressed file " + path.string());
  std::vector<Envelope> out;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::size_t end = nl == std::string::npos ? text.size() : nl + 1;
    try {
      out.push_back(decode(std::string_view(text).substr(start, end - start)));
    } catch (const DecodeError& err) {
      throw DecodeError(start + err.offset(), path.string() + " line " + std::to_string(out.size() + 1) + ": " + err.what());
    }
    start = end;
  }
  return out;
}

void write_episode_log(const std::filesystem::path& path, const metrics::EpisodeLog& log, const json& config) {
  write_envelopes(path, log_to_envelopes(log, config));
}

LoadedLog read_episode_log(const std::filesystem::path& path) { return log_from_envelopes(read_envelopes(path)); }

}  // namespace hapcompass::transport
