#include "hapcompass/experiment/runner.hpp"

#include <map>
#include <set>

#include <gtest/gtest.h>

#include "hapcompass/core/errors.hpp"

namespace hapcompass::experiment {
namespace {

using haptics::Condition;

transport::SessionConfig key_session(Condition c, std::uint64_t seed = 3) {
  transport::SessionConfig s;
  s.pipeline.rotation = task_rotation(sim::TaskKind::key_insertion);
  s.condition = c;
  s.seed = seed;
  return s;
}

OperatorConfig steady() {
  OperatorConfig op;
  op.tremor_std = 0.0;
  op.direction_noise = 0.0;
  return op;
}

// Puts the operator at its hover point so the next call starts the descent.
ScriptedOperator hovering(Condition c, const OperatorConfig& op) {
  ScriptedOperator human(op, key_session(c), 11);
  const Position3 hover = human.perceived_hole() + Position3{0, 0, op.hover_height};
  human.act({0.0, hover, 0.0, 0.0});
  return human;
}

Position3 hover_point(const ScriptedOperator& human, const OperatorConfig& op) {
  return human.perceived_hole() + Position3{0, 0, op.hover_height};
}

TEST(OperatorConfig, RejectsBadValues) {
  EXPECT_NO_THROW(OperatorConfig{}.validate());
  OperatorConfig op;
  op.descent_speed = 0.0;
  EXPECT_THROW(op.validate(), ConfigError);
  op = OperatorConfig{};
  op.tremor_std = -1.0;
  EXPECT_THROW(op.validate(), ConfigError);
  op = OperatorConfig{};
  op.stable_tracking_factor = 1.5;
  EXPECT_THROW(op.validate(), ConfigError);
}

TEST(ScriptedOperator, DescendsWhenNothingIsFelt) {
  const OperatorConfig op = steady();
  for (Condition c : {Condition::vision_only, Condition::device_vibration, Condition::directional}) {
    ScriptedOperator human = hovering(c, op);
    const Position3 a = human.act({0.02, hover_point(human, op), 0.0, 0.0});
    EXPECT_NEAR(a.z, -op.descent_speed * 0.02, 1e-12);
    EXPECT_NEAR(a.x, 0.0, 1e-12);
    EXPECT_NEAR(a.y, 0.0, 1e-12);
  }
}

TEST(ScriptedOperator, DirectionalCueTriggersSidestepAwayFromForce) {
  const OperatorConfig op = steady();
  // Device angle 0 maps back to task +x: the tool is pushed toward +x, so step to −x.
  ScriptedOperator human = hovering(Condition::directional, op);
  const Position3 a = human.act({0.02, hover_point(human, op), 0.0, 0.5});
  EXPECT_LT(a.x, 0.0);
  EXPECT_NEAR(a.z, 0.0, 1e-12);
  // Device angle π/2 is the insertion axis: nothing lateral to correct.
  ScriptedOperator axial = hovering(Condition::directional, op);
  const Position3 b = axial.act({0.02, hover_point(axial, op), kPi / 2, 0.5});
  EXPECT_NEAR(b.x, 0.0, 1e-12);
  EXPECT_LT(b.z, 0.0);
}

TEST(ScriptedOperator, AmplitudeOnlyCueTriggersBackOff) {
  const OperatorConfig op = steady();
  ScriptedOperator human = hovering(Condition::device_vibration, op);
  EXPECT_GT(human.act({0.02, hover_point(human, op), 0.0, 0.5}).z, 0.0);
}

// Feeds identical camera views with different cue content; the chosen
// actions may only depend on what the condition lets through.
std::vector<Position3> replay_views(Condition c, double angle, double amplitude) {
  ScriptedOperator human(OperatorConfig{}, key_session(c), 5);
  std::vector<Position3> out;
  Position3 ee{0.004, -0.003, 0.012};
  for (int i = 0; i < 400; ++i) {
    const Position3 a = human.act({0.02 * i, ee, angle, amplitude});
    out.push_back(a);
    ee += sim::clamp_step(a, 0.005);
  }
  return out;
}

TEST(ScriptedOperator, IgnoresInformationTheConditionWithholds) {
  EXPECT_EQ(replay_views(Condition::vision_only, 0.0, 0.0), replay_views(Condition::vision_only, 1.0, 0.9));
  EXPECT_EQ(replay_views(Condition::device_vibration, 0.0, 0.3), replay_views(Condition::device_vibration, 2.0, 0.3));
  EXPECT_NE(replay_views(Condition::device_vibration, 0.0, 0.0), replay_views(Condition::device_vibration, 0.0, 0.9));
  EXPECT_NE(replay_views(Condition::directional, 0.0, 0.9), replay_views(Condition::directional, 2.0, 0.9));
}

TEST(ScriptedOperator, ControllerConditionTracksMoreSteadily) {
  auto spread = [](Condition c) {
    OperatorConfig op;
    op.direction_noise = 0.0;
    ScriptedOperator human(op, key_session(c), 9);
    const Position3 hover = hover_point(human, op);
    human.act({0.0, hover, 0.0, 0.0});
    double sq = 0.0;
    for (int i = 0; i < 200; ++i) {
      const Position3 a = human.act({0.0, hover, 0.0, 0.0});
      sq += a.x * a.x + a.y * a.y;
    }
    return sq;
  };
  EXPECT_LT(spread(Condition::controller_vibration), spread(Condition::device_vibration));
}

TEST(RunEpisode, DeterministicAndTerminated) {
  const auto a = run_episode(key_session(Condition::directional, 21), OperatorConfig{}, 4);
  const auto b = run_episode(key_session(Condition::directional, 21), OperatorConfig{}, 4);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.events.size(), 1u);
  EXPECT_NO_THROW(a.validate());
  EXPECT_EQ(a.frames.size(), a.actions.size() + 1);
  EXPECT_NE(a, run_episode(key_session(Condition::directional, 21), OperatorConfig{}, 5));
}

TEST(RunEpisode, PerfectPerceptionSucceedsInEveryCondition) {
  OperatorConfig op = steady();
  op.visual_bias_std = 0.0;
  const metrics::LeverConfig lev = metrics::LeverConfig::for_task(key_session(Condition::vision_only).task);
  for (Condition c : {Condition::vision_only, Condition::device_vibration, Condition::controller_vibration,
                      Condition::directional}) {
    const auto log = run_episode(key_session(c, 8), op, 1);
    const auto m = metrics::episode_metrics(log, 2.0, lev);
    EXPECT_TRUE(m.success) << haptics::to_string(c);
    EXPECT_LT(m.max_force, 20.0);
  }
}

ExperimentConfig key_experiment(int episodes, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.session = key_session(Condition::directional);
  cfg.episodes = episodes;
  cfg.seed = seed;
  return cfg;
}

TEST(RunExperiment, BlocksAndPairedSeeds) {
  const ExperimentConfig cfg = key_experiment(7, 2);
  std::size_t sunk = 0;
  const ExperimentResult r = run_experiment(cfg, [&](const metrics::EpisodeRow&, const metrics::EpisodeLog& log) {
    EXPECT_EQ(log.events.size(), 1u);
    ++sunk;
  });
  ASSERT_EQ(r.episodes.size(), 28u);
  EXPECT_EQ(sunk, 28u);
  std::map<std::string, std::vector<std::uint64_t>> seeds;
  for (std::size_t i = 0; i < r.episodes.size(); ++i) {
    EXPECT_EQ(r.episodes[i].episode, i);
    EXPECT_EQ(r.episodes[i].task, "key_insertion");
    seeds[r.episodes[i].condition].push_back(r.episodes[i].seed);
  }
  // first round: four blocks of five, then four blocks of two
  for (std::size_t b = 0; b < 4; ++b) {
    for (std::size_t i = 1; i < 5; ++i) EXPECT_EQ(r.episodes[5 * b + i].condition, r.episodes[5 * b].condition);
  }
  ASSERT_EQ(seeds.size(), 4u);
  for (const auto& [c, s] : seeds) {
    EXPECT_EQ(s, seeds.begin()->second) << c;
    EXPECT_EQ(std::set<std::uint64_t>(s.begin(), s.end()).size(), 7u);
  }
  ASSERT_EQ(r.summary.size(), 4u);
  EXPECT_EQ(r.summary[0].condition, "C1");
  EXPECT_EQ(r.summary[3].condition, "C4");
  for (const auto& s : r.summary) EXPECT_EQ(s.episodes, 7u);
  EXPECT_EQ(run_experiment(cfg).episodes.size(), 28u);
}

TEST(RunExperiment, SingleEpisode) {
  ExperimentConfig cfg = key_experiment(1, 4);
  cfg.conditions = {Condition::directional};
  const ExperimentResult r = run_experiment(cfg);
  ASSERT_EQ(r.episodes.size(), 1u);
  ASSERT_EQ(r.summary.size(), 1u);
  EXPECT_EQ(r.summary[0].episodes, 1u);
  EXPECT_EQ(r.summary[0].max_force, r.episodes[0].metrics.max_force);
}

TEST(RunExperiment, DirectionalBeatsVisionOnlyOnKeyTask) {
  const ExperimentResult r = run_experiment(key_experiment(20, 1));
  const auto& c1 = r.summary[0];
  const auto& c4 = r.summary[3];
  EXPECT_GT(c4.success_rate, c1.success_rate);
  EXPECT_LT(c4.max_force, c1.max_force);
}

TEST(RunExperiment, RejectsEmptyBatches) {
  ExperimentConfig cfg = key_experiment(0, 1);
  EXPECT_THROW(run_experiment(cfg), ConfigError);
  cfg.episodes = 2;
  cfg.conditions.clear();
  EXPECT_THROW(run_experiment(cfg), ConfigError);
}

}  // namespace
}  // namespace hapcompass::experiment
