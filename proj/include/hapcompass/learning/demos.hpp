#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hapcompass/learning/policy.hpp"
#include "hapcompass/metrics/metrics.hpp"
#include "hapcompass/transport/session.hpp"

namespace hapcompass::learning {

/// Key insertion with the lock fixed and the gripper pre-aligned above the
/// keyhole: only a small start offset separates the tip from the hole.
transport::SessionConfig pre_aligned_key_session(std::uint64_t seed);

enum class DemoMode { reactive, nonreactive };

std::string_view to_string(DemoMode mode);
DemoMode parse_demo_mode(std::string_view name);

struct ExpertConfig {
  double descent_step = 0.2e-3;  // m per tick
  double reactive_gain = 1e-4;   // m of sideways step per N of lateral tactile change
  double lateral_noise = 0.01e-3;

  void validate() const;
};

/// Straight descent with small seeded sideways noise; the reactive expert
/// also steps against the lateral tactile change.
Position3 scripted_expert(DemoMode mode, const Observation& obs, const ExpertConfig& cfg, Rng& rng);

/// The observation the policy sees for the latest session tick.
Observation observe(const transport::Session& session);

metrics::EpisodeLog collect_demo(DemoMode mode, const transport::SessionConfig& session, const ExpertConfig& cfg);

/// `n` demonstrations on seeds derive_seed(base, 0..n−1).
std::vector<metrics::EpisodeLog> collect_demos(DemoMode mode, int n, std::uint64_t base_seed,
                                               const ExpertConfig& cfg = {});

/// One transition per frame that has an action after it: the observation at
/// that frame and the next `horizon` actions, tail-padded with zeros. ΔF is
/// recomputed by running the tactile pipeline over the logged frames.
Dataset dataset_from_logs(std::span<const metrics::EpisodeLog> logs, const haptics::PipelineConfig& pipeline,
                          int horizon);

/// Receding-horizon execution: predict a chunk, run its first `replan`
/// steps, observe again, until the episode ends.
metrics::EpisodeLog rollout_episode(const Policy& policy, const transport::SessionConfig& session);

/// Metrics for episodes on seeds derive_seed(base, 0..n−1).
std::vector<metrics::EpisodeMetrics> rollout(const Policy& policy, int n, std::uint64_t base_seed,
                                             double contact_threshold = 2.0);

}  // namespace hapcompass::learning
