#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "hapcompass/haptics/pipeline.hpp"

namespace hapcompass::device {

struct RotorState {
  double angle = 0.0;                                 // rad, [−π, π) (full) or [0, π) (half rotation)
  double angular_velocity_limit = deg2rad(600.0);     // rad/s
  double last_update = 0.0;                           // s
  int polarity = 1;                                   // waveform sign; only flips in half-rotation mode

  friend constexpr bool operator==(const RotorState&, const RotorState&) = default;
};

struct WaveformParams {
  double resonance_hz = 170.0;
  double sample_rate_hz = 8000.0;
  double asymmetry_ratio = 3.0;  // slow-return duration / fast-stroke duration
  int cycles_per_burst = 3;

  /// Throws ConfigError unless sample_rate ≥ 10·resonance and the ratio is in (1, 10].
  void validate() const;

  /// Samples in one waveform period at this rate (rounded, ≥ 10).
  std::size_t samples_per_period() const;
};

struct SampleBuffer {
  std::vector<double> samples;  // normalized drive, each in [−1, 1]
  double sample_rate_hz = 0.0;

  friend bool operator==(const SampleBuffer&, const SampleBuffer&) = default;
};

struct DeviceConfig {
  WaveformParams waveform;
  double angular_velocity_limit = deg2rad(600.0);
  /// Rotor confined to [0, π); the opposite half-plane is rendered by
  /// inverting the waveform polarity.
  bool half_rotation = false;

  void validate() const;
};

struct DeviceOutput {
  double realized_angle = 0.0;  // direction actually rendered, [−π, π)
  double target_angle = 0.0;
  double amplitude = 0.0;
  int polarity = 1;
  SampleBuffer burst;

  friend bool operator==(const DeviceOutput&, const DeviceOutput&) = default;
};

/// Rate-limited move toward `theta_target` along the shortest arc. Throws
/// MonotonicityError if `now` precedes state.last_update.
RotorState step_rotor(const RotorState& state, double theta_target, double now);

/// Asymmetric sawtooth drive at the resonance frequency: a fast stroke over
/// 1/(1 + ratio) of each period and a slow return over the rest. Each full
/// period has zero mean; the buffer peak |sample| equals `amplitude`.
/// `polarity` −1 mirrors the waveform (pull in the opposite direction).
SampleBuffer synth_waveform(double amplitude, double duration, const WaveformParams& p, int polarity = 1);

/// One service-loop step: advance the rotor toward the command, synthesize the
/// burst, and report the realized (rate-limited) direction.
std::pair<RotorState, DeviceOutput> device_step(const RotorState& rotor, const haptics::HapticCommand& cmd, double now,
                                                const DeviceConfig& cfg);

class DeviceModel {
 public:
  explicit DeviceModel(DeviceConfig cfg);

  const DeviceOutput& step(const haptics::HapticCommand& cmd, double now);

  const RotorState& rotor() const { return rotor_; }
  const DeviceOutput& last_output() const { return last_; }
  const DeviceConfig& config() const { return cfg_; }

 private:
  DeviceConfig cfg_;
  RotorState rotor_;
  DeviceOutput last_;
};

}  // namespace hapcompass::device
