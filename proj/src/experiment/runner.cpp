#include "hapcompass/experiment/runner.hpp"

#include <span>

#include "hapcompass/core/errors.hpp"

namespace hapcompass::experiment {

Rotation3 task_rotation(sim::TaskKind) { return Rotation3::from_row_major({1, 0, 0, 0, 0, 1, 0, -1, 0}); }

void ExperimentConfig::validate() const {
  session.validate();
  op.validate();
  if (conditions.empty()) throw ConfigError("experiment needs at least one condition");
  if (episodes <= 0) throw ConfigError("experiment.episodes must be > 0");
  if (block_size <= 0) throw ConfigError("experiment.block_size must be > 0");
  if (!(contact_threshold > 0.0)) throw ConfigError("metrics.contact_threshold must be > 0");
}

std::uint64_t episode_seed(std::uint64_t base, int j) { return derive_seed(base, static_cast<std::uint64_t>(j)); }

std::uint64_t operator_seed(std::uint64_t episode) { return derive_seed(episode, 1); }

metrics::EpisodeLog run_episode(const transport::SessionConfig& session, const OperatorConfig& op,
                                std::uint64_t op_seed) {
  transport::Session s(session);
  ScriptedOperator human(op, session, op_seed);
  OperatorView view = view_of(s.initial());
  while (!s.finished()) view = view_of(s.tick_action(human.act(view)));
  return s.log();
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const EpisodeSink& sink) {
  cfg.validate();
  const metrics::LeverConfig lever = metrics::LeverConfig::for_task(cfg.session.task);
  const std::string task(sim::to_string(cfg.session.task.kind));

  ExperimentResult out;
  std::vector<std::vector<metrics::EpisodeMetrics>> per_condition(cfg.conditions.size());
  std::vector<std::size_t> order(cfg.conditions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng block_rng(derive_seed(cfg.seed, 0xb10c));

  for (int first = 0; first < cfg.episodes; first += cfg.block_size) {
    block_rng.shuffle(std::span<std::size_t>(order));
    const int last = std::min(cfg.episodes, first + cfg.block_size);
    for (std::size_t c : order) {
      for (int j = first; j < last; ++j) {
        transport::SessionConfig session = cfg.session;
        session.condition = cfg.conditions[c];
        session.seed = episode_seed(cfg.seed, j);
        const metrics::EpisodeLog log = run_episode(session, cfg.op, operator_seed(session.seed));
        metrics::EpisodeRow row{out.episodes.size(), session.seed, std::string(haptics::to_string(session.condition)),
                                task, metrics::episode_metrics(log, cfg.contact_threshold, lever)};
        per_condition[c].push_back(row.metrics);
        if (sink) sink(row, log);
        out.episodes.push_back(std::move(row));
      }
    }
  }
  for (std::size_t c = 0; c < cfg.conditions.size(); ++c) {
    out.summary.push_back(
        metrics::summarize(std::string(haptics::to_string(cfg.conditions[c])), task, per_condition[c]));
  }
  return out;
}

}  // namespace hapcompass::experiment
