#include "hapcompass/device/device_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hapcompass/core/errors.hpp"

namespace hapcompass::device {

void WaveformParams::validate() const {
  if (!(resonance_hz > 0.0)) throw ConfigError("waveform.resonance_hz must be > 0");
  if (!(sample_rate_hz >= 10.0 * resonance_hz)) throw ConfigError("waveform.sample_rate_hz must be >= 10 x resonance");
  if (!(asymmetry_ratio > 1.0 && asymmetry_ratio <= 10.0)) throw ConfigError("waveform.asymmetry_ratio must be in (1, 10]");
  if (cycles_per_burst < 1) throw ConfigError("waveform.cycles_per_burst must be >= 1");
}

std::size_t WaveformParams::samples_per_period() const {
  return std::max<std::size_t>(10, static_cast<std::size_t>(std::lround(sample_rate_hz / resonance_hz)));
}

void DeviceConfig::validate() const {
  waveform.validate();
  if (!(angular_velocity_limit > 0.0)) throw ConfigError("device.angular_velocity_limit must be > 0");
}

RotorState step_rotor(const RotorState& state, double theta_target, double now) {
  if (now < state.last_update) {
    throw MonotonicityError("rotor step at t=" + std::to_string(now) + " precedes t=" + std::to_string(state.last_update));
  }
  const double max_move = state.angular_velocity_limit * (now - state.last_update);
  const double distance = shortest_angular_distance(state.angle, theta_target);
  RotorState next = state;
  next.angle = wrap_angle(state.angle + std::clamp(distance, -max_move, max_move));
  next.last_update = now;
  return next;
}

namespace {

// One period of the unit sawtooth, zero-mean and peak-normalized so the
// stroke/return slope ratio survives exactly (the normalization is affine).
std::vector<double> unit_period(const WaveformParams& p) {
  const std::size_t n = p.samples_per_period();
  const double stroke = 1.0 / (1.0 + p.asymmetry_ratio);
  std::vector<double> period(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = static_cast<double>(i) / static_cast<double>(n);
    period[i] = phase < stroke ? -1.0 + 2.0 * phase / stroke : 1.0 - 2.0 * (phase - stroke) / (1.0 - stroke);
  }
  const double mean = std::accumulate(period.begin(), period.end(), 0.0) / static_cast<double>(n);
  double peak = 0.0;
  for (double& s : period) {
    s -= mean;
    peak = std::max(peak, std::abs(s));
  }
  for (double& s : period) s /= peak;
  return period;
}

}  // namespace

SampleBuffer synth_waveform(double amplitude, double duration, const WaveformParams& p, int polarity) {
  p.validate();
  if (!(amplitude >= 0.0 && amplitude <= 1.0)) throw std::invalid_argument("amplitude must be in [0, 1]");
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be > 0");
  const auto length = static_cast<std::size_t>(std::llround(duration * p.sample_rate_hz));
  SampleBuffer out{std::vector<double>(length, 0.0), p.sample_rate_hz};
  if (amplitude == 0.0) return out;
  const std::vector<double> period = unit_period(p);
  const double gain = amplitude * (polarity < 0 ? -1.0 : 1.0);
  for (std::size_t i = 0; i < length; ++i) out.samples[i] = gain * period[i % period.size()];
  return out;
}

std::pair<RotorState, DeviceOutput> device_step(const RotorState& rotor, const haptics::HapticCommand& cmd, double now,
                                                const DeviceConfig& cfg) {
  double rotor_target = cmd.theta;
  int polarity = 1;
  RotorState next;
  if (cfg.half_rotation) {
    if (cmd.theta < 0.0) {
      rotor_target = cmd.theta + kPi;
      polarity = -1;
    }
    // The half-range rotor cannot pass through ±π; move directly.
    if (now < rotor.last_update) {
      throw MonotonicityError("rotor step at t=" + std::to_string(now) + " precedes t=" + std::to_string(rotor.last_update));
    }
    const double max_move = rotor.angular_velocity_limit * (now - rotor.last_update);
    next = rotor;
    next.angle = std::clamp(rotor.angle + std::clamp(rotor_target - rotor.angle, -max_move, max_move), 0.0,
                            std::nextafter(kPi, 0.0));
    next.last_update = now;
    next.polarity = polarity;
  } else {
    next = step_rotor(rotor, rotor_target, now);
  }

  DeviceOutput out;
  out.target_angle = cmd.theta;
  out.amplitude = cmd.amplitude;
  out.polarity = next.polarity;
  out.realized_angle = wrap_angle(next.angle + (next.polarity < 0 ? kPi : 0.0));
  const double burst_s = static_cast<double>(cfg.waveform.cycles_per_burst * cfg.waveform.samples_per_period()) /
                         cfg.waveform.sample_rate_hz;
  out.burst = synth_waveform(cmd.amplitude, burst_s, cfg.waveform, next.polarity);
  return {next, std::move(out)};
}

DeviceModel::DeviceModel(DeviceConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  rotor_.angular_velocity_limit = cfg_.angular_velocity_limit;
}

const DeviceOutput& DeviceModel::step(const haptics::HapticCommand& cmd, double now) {
  auto [rotor, out] = device_step(rotor_, cmd, now, cfg_);
  rotor_ = rotor;
  last_ = std::move(out);
  return last_;
}

}  // namespace hapcompass::device
