#include "hapcompass/transport/session.hpp"

#include <stdexcept>

#include "hapcompass/core/errors.hpp"

namespace hapcompass::transport {

void SessionConfig::validate() const {
  task.validate();
  pipeline.validate();
  device.validate();
  if (!(tick_dt > 0.0)) throw ConfigError("tick_dt must be > 0");
  if (!(retarget_scale > 0.0)) throw ConfigError("retarget scale must be > 0");
}

Session::Session(SessionConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      sim_(sim::sim_reset(cfg_.task, cfg_.seed)),
      mapper_(cfg_.pipeline),
      device_(cfg_.device),
      retarget_{cfg_.retarget_scale, cfg_.task.max_step, std::nullopt} {
  log_.meta = {cfg_.task.kind, cfg_.condition, cfg_.seed};
  initial_.frame = sim::observe(sim_, cfg_.task);
  render(initial_);
  last_ = initial_;
}

void Session::render(TickOutput& out) {
  out.raw_cue = mapper_.step(out.frame);
  out.cue = haptics::gate_cue(out.raw_cue, cfg_.condition);
  out.device = device_.step(out.cue, out.frame.t);
  log_.frames.push_back(out.frame);
  log_.cues.push_back(out.cue);
}

const TickOutput& Session::tick(const std::optional<HandPoseMsg>& pose) {
  if (finished()) throw TerminalStateError("session stepped after the episode ended");
  Position3 action;
  if (pose) action = retarget(*pose, retarget_);
  return tick_action(action);
}

const TickOutput& Session::tick_action(const Position3& action) {
  if (finished()) throw TerminalStateError("session stepped after the episode ended");
  TickOutput out;
  out.action = sim::clamp_step(action, cfg_.task.max_step);
  sim::StepResult step = sim::sim_step(sim_, cfg_.task, out.action, cfg_.tick_dt);
  sim_ = std::move(step.state);
  out.frame = step.frame;
  log_.actions.push_back(out.action);
  render(out);
  if (!step.events.empty()) {
    const sim::SimEvent& e = step.events.front();
    out.event = metrics::EpisodeEvent{e.t, e.kind == sim::SimEventKind::success ? metrics::EpisodeEventKind::success
                                                                                 : metrics::EpisodeEventKind::fracture};
  } else if (sim_.clock >= cfg_.task.max_episode_s - 1e-9) {
    out.event = metrics::EpisodeEvent{sim_.clock, metrics::EpisodeEventKind::timeout};
  }
  if (out.event) log_.events.push_back(*out.event);
  last_ = std::move(out);
  return last_;
}

void Session::abort() {
  if (finished()) return;
  log_.events.push_back({sim_.clock, metrics::EpisodeEventKind::aborted});
}

}  // namespace hapcompass::transport
