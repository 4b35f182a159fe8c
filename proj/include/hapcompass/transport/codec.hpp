#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hapcompass/transport/messages.hpp"

namespace hapcompass::transport {

/// One NDJSON line: compact JSON with sorted keys, terminated by '\n'.
std::string encode(const Envelope& e);

/// Inverse of encode. The frame must be exactly one '\n'-terminated line;
/// anything else throws DecodeError with the failing byte offset.
Envelope decode(std::string_view frame);

/// Length-prefixed binary frame: "HC", u32 LE body length, then u64 seq,
/// i64 t_send, u16 kind length, kind bytes and a MessagePack payload.
std::vector<std::uint8_t> encode_binary(const Envelope& e);
Envelope decode_binary(std::span<const std::uint8_t> frame);

/// Splits a byte stream into NDJSON lines.
class LineFramer {
 public:
  explicit LineFramer(std::size_t max_line = 1 << 20) : max_line_(max_line) {}

  void feed(std::string_view bytes) { buffer_.append(bytes); }

  /// Next complete line including its '\n'. Throws DecodeError if a line
  /// grows past max_line without a terminator.
  std::optional<std::string> next_line();

  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::string buffer_;
  std::size_t max_line_;
};

/// Expected-next seq bookkeeping for one peer, one counter per kind.
class SeqTracker {
 public:
  struct Gap {
    std::string kind;
    std::uint64_t expected = 0;
    std::uint64_t received = 0;
  };

  /// Records `seq` for `kind`; returns the gap when it is not the successor
  /// of the previous one. The first seq seen on a stream is accepted as is.
  std::optional<Gap> observe(const std::string& kind, std::uint64_t seq);

  std::uint64_t gaps() const { return gaps_; }

 private:
  std::map<std::string, std::uint64_t, std::less<>> next_;
  std::uint64_t gaps_ = 0;
};

/// Monotone per-kind seq source for outbound envelopes.
class SeqCounter {
 public:
  std::uint64_t next(std::string_view kind);

 private:
  std::map<std::string, std::uint64_t, std::less<>> next_;
};

}  // namespace hapcompass::transport
