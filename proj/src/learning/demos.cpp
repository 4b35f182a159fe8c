#include "hapcompass/learning/demos.hpp"

#include <cmath>

#include "hapcompass/core/errors.hpp"

namespace hapcompass::learning {

transport::SessionConfig pre_aligned_key_session(std::uint64_t seed) {
  transport::SessionConfig s;
  s.task.nominal_start = {0.0, 0.0, 5e-3};
  s.task.start_cube_half_extent = 1.2e-3;
  s.task.max_episode_s = 10.0;
  s.condition = haptics::Condition::directional;
  s.seed = seed;
  return s;
}

std::string_view to_string(DemoMode mode) { return mode == DemoMode::reactive ? "reactive" : "nonreactive"; }

DemoMode parse_demo_mode(std::string_view name) {
  if (name == "reactive" || name == "C4") return DemoMode::reactive;
  if (name == "nonreactive" || name == "C3") return DemoMode::nonreactive;
  throw ConfigError("unknown demo mode '" + std::string(name) + "' (expected reactive or nonreactive)");
}

void ExpertConfig::validate() const {
  if (!(descent_step > 0.0)) throw ConfigError("expert.descent_step must be > 0");
  if (!(reactive_gain >= 0.0)) throw ConfigError("expert.reactive_gain must be >= 0");
  if (!(lateral_noise >= 0.0)) throw ConfigError("expert.lateral_noise must be >= 0");
}

Position3 scripted_expert(DemoMode mode, const Observation& obs, const ExpertConfig& cfg, Rng& rng) {
  Position3 a{rng.normal() * cfg.lateral_noise, rng.normal() * cfg.lateral_noise, -cfg.descent_step};
  if (mode == DemoMode::reactive) {
    a.x -= cfg.reactive_gain * obs.tactile_delta.x;
    a.y -= cfg.reactive_gain * obs.tactile_delta.y;
  }
  return a;
}

Observation observe(const transport::Session& session) {
  return {session.mapper().last_delta(), session.sim_state().ee_position};
}

metrics::EpisodeLog collect_demo(DemoMode mode, const transport::SessionConfig& session, const ExpertConfig& cfg) {
  cfg.validate();
  transport::Session s(session);
  Rng rng(derive_seed(session.seed, 1));
  while (!s.finished()) s.tick_action(scripted_expert(mode, observe(s), cfg, rng));
  return s.log();
}

std::vector<metrics::EpisodeLog> collect_demos(DemoMode mode, int n, std::uint64_t base_seed, const ExpertConfig& cfg) {
  std::vector<metrics::EpisodeLog> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(collect_demo(mode, pre_aligned_key_session(derive_seed(base_seed, static_cast<std::uint64_t>(i))), cfg));
  }
  return out;
}

Dataset dataset_from_logs(std::span<const metrics::EpisodeLog> logs, const haptics::PipelineConfig& pipeline,
                          int horizon) {
  if (horizon <= 0) throw ConfigError("horizon must be > 0");
  Dataset data{horizon, {}};
  for (const auto& log : logs) {
    if (log.frames.size() != log.actions.size() + 1) {
      throw std::invalid_argument("episode log must have one more frame than actions");
    }
    haptics::TactileMapper mapper(pipeline);
    for (std::size_t i = 0; i < log.actions.size(); ++i) {
      mapper.step(log.frames[i]);
      Transition t{{mapper.last_delta(), log.frames[i].ee_position}, {}};
      for (int k = 0; k < horizon; ++k) {
        const std::size_t j = i + static_cast<std::size_t>(k);
        t.chunk.push_back(j < log.actions.size() ? log.actions[j] : Position3{});
      }
      data.transitions.push_back(std::move(t));
    }
  }
  return data;
}

metrics::EpisodeLog rollout_episode(const Policy& policy, const transport::SessionConfig& session) {
  policy.validate();
  transport::Session s(session);
  while (!s.finished()) {
    const ActionChunk chunk = policy.predict(observe(s), session.task.max_step);
    for (int k = 0; k < policy.shape.replan && !s.finished(); ++k) s.tick_action(chunk[static_cast<std::size_t>(k)]);
  }
  return s.log();
}

std::vector<metrics::EpisodeMetrics> rollout(const Policy& policy, int n, std::uint64_t base_seed,
                                             double contact_threshold) {
  std::vector<metrics::EpisodeMetrics> out;
  for (int i = 0; i < n; ++i) {
    const auto session = pre_aligned_key_session(derive_seed(base_seed, static_cast<std::uint64_t>(i)));
    out.push_back(metrics::episode_metrics(rollout_episode(policy, session), contact_threshold,
                                           metrics::LeverConfig::for_task(session.task)));
  }
  return out;
}

}  // namespace hapcompass::learning
