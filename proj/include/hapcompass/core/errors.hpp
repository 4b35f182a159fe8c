#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hapcompass {

/// Invalid configuration detected at load or construction time.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A timestamp went backwards on a stream that requires monotonic time.
class MonotonicityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The simulator was stepped after a terminal event (success or fracture).
class TerminalStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or file shapes disagree with what the caller expects.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or truncated wire frame. `offset` is the byte position within
/// the frame where decoding failed.
class DecodeError : public std::runtime_error {
 public:
  DecodeError(std::size_t offset, const std::string& what)
      : std::runtime_error("decode error at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace hapcompass
