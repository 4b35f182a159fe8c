#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hapcompass/experiment/operator.hpp"
#include "hapcompass/metrics/metrics.hpp"
#include "hapcompass/transport/session.hpp"

namespace hapcompass::experiment {

/// Device mapping used for a task unless the config overrides it. Hole tasks
/// and probing put the bending-critical x axis on device x and the insertion
/// axis on device y.
Rotation3 task_rotation(sim::TaskKind kind);

struct ExperimentConfig {
  transport::SessionConfig session;  // condition and seed are set per episode
  OperatorConfig op;
  double contact_threshold = 2.0;  // N, for contact duration; same default as recalibration
  std::vector<haptics::Condition> conditions{haptics::Condition::vision_only, haptics::Condition::device_vibration,
                                             haptics::Condition::controller_vibration,
                                             haptics::Condition::directional};
  int episodes = 20;    // per condition
  int block_size = 5;   // consecutive episodes of one condition
  std::uint64_t seed = 0;

  void validate() const;
};

/// Seeds for the j-th episode of any condition. Conditions share them, so
/// every condition faces the same start poses and perception errors.
std::uint64_t episode_seed(std::uint64_t base, int j);
std::uint64_t operator_seed(std::uint64_t episode);

/// One closed-loop episode: scripted operator driving the lockstep node graph
/// until a terminal event.
metrics::EpisodeLog run_episode(const transport::SessionConfig& session, const OperatorConfig& op,
                                std::uint64_t op_seed);

struct ExperimentResult {
  std::vector<metrics::EpisodeRow> episodes;   // execution order
  std::vector<metrics::MetricsSummary> summary;  // one row per condition, config order
};

using EpisodeSink = std::function<void(const metrics::EpisodeRow&, const metrics::EpisodeLog&)>;

/// Runs `episodes` per condition in blocks of `block_size`; the condition
/// order within each round of blocks is a seeded permutation.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const EpisodeSink& sink = {});

}  // namespace hapcompass::experiment
