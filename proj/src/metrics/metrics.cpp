#include "hapcompass/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "hapcompass/core/errors.hpp"

namespace hapcompass::metrics {

void LeverConfig::validate() const {
  if (!r.finite()) throw ConfigError("lever offset must be finite");
  if (std::abs(u_hat.norm() - 1.0) > 1e-9) throw ConfigError("lever bending axis must be a unit vector");
}

LeverConfig LeverConfig::for_task(const sim::TaskConfig& cfg) { return {sim::grip_offset(cfg), cfg.bending_axis}; }

double bending_torque(const Wrench& w, const LeverConfig& lev) {
  return std::abs(project(lev.u_hat, w.torque - moment(lev.r, w.force)));
}

EpisodeMetrics episode_metrics(const EpisodeLog& log, double contact_threshold, const LeverConfig& lev) {
  if (log.frames.empty()) throw std::invalid_argument("episode_metrics needs at least one frame");
  EpisodeMetrics m;
  const auto terminal = log.terminal_event();
  m.success = terminal && terminal->kind == EpisodeEventKind::success;
  const double t0 = log.frames.front().t;
  const double t_end = terminal ? terminal->t : log.frames.back().t;
  m.completion_time = t_end - t0;
  for (std::size_t i = 0; i < log.frames.size(); ++i) {
    const SensorFrame& f = log.frames[i];
    if (f.t > t_end) break;
    const double force = f.wrench.force.norm();
    m.max_force = std::max(m.max_force, force);
    m.max_bending_torque = std::max(m.max_bending_torque, bending_torque(f.wrench, lev));
    if (i > 0 && force > contact_threshold) m.contact_duration += f.t - log.frames[i - 1].t;
  }
  return m;
}

MetricsSummary summarize(std::string condition, std::string task, std::span<const EpisodeMetrics> episodes) {
  MetricsSummary s;
  s.condition = std::move(condition);
  s.task = std::move(task);
  s.episodes = episodes.size();
  if (episodes.empty()) return s;
  for (const auto& e : episodes) {
    s.successes += e.success ? 1 : 0;
    s.completion_time += e.completion_time;
    s.contact_duration += e.contact_duration;
    s.max_force += e.max_force;
    s.max_bending_torque += e.max_bending_torque;
  }
  const double n = static_cast<double>(episodes.size());
  s.success_rate = static_cast<double>(s.successes) / n;
  s.completion_time /= n;
  s.contact_duration /= n;
  s.max_force /= n;
  s.max_bending_torque /= n;
  return s;
}

namespace {

void provenance(std::ostream& os, const std::string& config_json) {
  if (!config_json.empty()) os << "# config: " << config_json << '\n';
}

}  // namespace

void write_summary_csv(std::ostream& os, std::span<const MetricsSummary> rows, const std::string& config_json) {
  provenance(os, config_json);
  os << kSummaryColumns << '\n' << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.condition << ',' << r.task << ',' << r.success_rate << ',' << r.completion_time << ',' << r.contact_duration
       << ',' << r.max_force << ',' << r.max_bending_torque << ',' << r.episodes << '\n';
  }
}

void write_episode_csv(std::ostream& os, std::span<const EpisodeRow> rows, const std::string& config_json) {
  provenance(os, config_json);
  os << kEpisodeColumns << '\n' << std::setprecision(10);
  for (const auto& r : rows) {
    const EpisodeMetrics& m = r.metrics;
    os << r.episode << ',' << r.seed << ',' << r.condition << ',' << r.task << ',' << (m.success ? 1 : 0) << ','
       << m.completion_time << ',' << m.contact_duration << ',' << m.max_force << ',' << m.max_bending_torque << '\n';
  }
}

}  // namespace hapcompass::metrics
