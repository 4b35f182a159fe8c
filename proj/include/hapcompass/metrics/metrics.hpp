#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hapcompass/core/units.hpp"
#include "hapcompass/metrics/episode_log.hpp"
#include "hapcompass/sim/contact_sim.hpp"

namespace hapcompass::metrics {

/// Lever from the F/T origin to the grip point and the object's weak axis.
struct LeverConfig {
  Position3 r;
  Position3 u_hat{0.0, 1.0, 0.0};

  /// Throws ConfigError unless |u_hat| = 1 within 1e-9.
  void validate() const;

  static LeverConfig for_task(const sim::TaskConfig& cfg);
};

/// |û · (τ − r × F)|
double bending_torque(const Wrench& w, const LeverConfig& lev);

struct EpisodeMetrics {
  bool success = false;
  double completion_time = 0.0;     // s
  double contact_duration = 0.0;    // s with |F| over the threshold
  double max_force = 0.0;           // N
  double max_bending_torque = 0.0;  // N·m

  friend constexpr bool operator==(const EpisodeMetrics&, const EpisodeMetrics&) = default;
};

/// Contact duration sums the interval ending at each over-threshold frame.
/// The episode ends at its terminal event, or at the last frame. Throws
/// std::invalid_argument on an empty log.
EpisodeMetrics episode_metrics(const EpisodeLog& log, double contact_threshold, const LeverConfig& lev);

/// Table-row aggregate over a block of episodes.
struct MetricsSummary {
  std::string condition;
  std::string task;
  std::size_t episodes = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  double completion_time = 0.0;  // means over all episodes
  double contact_duration = 0.0;
  double max_force = 0.0;
  double max_bending_torque = 0.0;
};

MetricsSummary summarize(std::string condition, std::string task, std::span<const EpisodeMetrics> episodes);

struct EpisodeRow {
  std::size_t episode = 0;
  std::uint64_t seed = 0;
  std::string condition;
  std::string task;
  EpisodeMetrics metrics;
};

inline constexpr std::string_view kSummaryColumns =
    "condition,task,success_rate,completion_time_s,contact_duration_s,max_force_n,max_bending_torque_nm,episodes";
inline constexpr std::string_view kEpisodeColumns =
    "episode,seed,condition,task,success,completion_time_s,contact_duration_s,max_force_n,max_bending_torque_nm";

/// Both writers start with a "# config: <json>" provenance line when
/// `config_json` is non-empty.
void write_summary_csv(std::ostream& os, std::span<const MetricsSummary> rows, const std::string& config_json);
void write_episode_csv(std::ostream& os, std::span<const EpisodeRow> rows, const std::string& config_json);

}  // namespace hapcompass::metrics
