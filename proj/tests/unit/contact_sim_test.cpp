#include "hapcompass/sim/contact_sim.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "hapcompass/core/errors.hpp"

namespace hapcompass::sim {
namespace {

// Drives a state with a fixed action until a terminal event or `max_ticks`.
struct Rollout {
  SimState state;
  std::vector<SensorFrame> frames;
  std::vector<SimEvent> events;
};

Rollout drive(SimState s, const TaskConfig& cfg, const Position3& action, int max_ticks) {
  Rollout r{s, {}, {}};
  for (int i = 0; i < max_ticks && !r.state.terminal; ++i) {
    StepResult out = sim_step(r.state, cfg, action, 0.02);
    r.state = std::move(out.state);
    r.frames.push_back(out.frame);
    r.events.insert(r.events.end(), out.events.begin(), out.events.end());
  }
  return r;
}

SimState placed(const TaskConfig& cfg, const Position3& tip) {
  SimState s = sim_reset(cfg, 1);
  s.ee_position = tip;
  s.mode = ContactMode::free;
  return s;
}

TEST(TaskConfig, PresetsValidate) {
  for (auto k : {TaskKind::key_insertion, TaskKind::usb_insertion, TaskKind::spaghetti_probing}) {
    EXPECT_NO_THROW(TaskConfig::preset(k).validate()) << to_string(k);
  }
}

TEST(TaskConfig, RejectsOutOfRangeFields) {
  TaskConfig c = TaskConfig::preset(TaskKind::key_insertion);
  c.clearance = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TaskConfig::preset(TaskKind::key_insertion);
  c.friction_mu = 1.6;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TaskConfig::preset(TaskKind::key_insertion);
  c.wall_stiffness = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TaskConfig::preset(TaskKind::key_insertion);
  c.insertion_depth_goal = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(TaskConfig, ParsesNames) {
  EXPECT_EQ(parse_task_kind("key"), TaskKind::key_insertion);
  EXPECT_EQ(parse_task_kind("usb_insertion"), TaskKind::usb_insertion);
  EXPECT_EQ(parse_task_kind("spaghetti"), TaskKind::spaghetti_probing);
  EXPECT_THROW(parse_task_kind("door"), ConfigError);
}

TEST(SimReset, KeyStartWithinCube) {
  const TaskConfig cfg = TaskConfig::preset(TaskKind::key_insertion);
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const Position3 d = sim_reset(cfg, seed).ee_position - cfg.nominal_start;
    ASSERT_LE(std::abs(d.x), 0.025);
    ASSERT_LE(std::abs(d.y), 0.025);
    ASSERT_LE(std::abs(d.z), 0.025);
  }
}

TEST(SimReset, UsbStartWithinCube) {
  const TaskConfig cfg = TaskConfig::preset(TaskKind::usb_insertion);
  double widest = 0.0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const Position3 d = sim_reset(cfg, seed).ee_position - cfg.nominal_start;
    ASSERT_LE(std::abs(d.x), 0.05);
    ASSERT_LE(std::abs(d.y), 0.05);
    ASSERT_LE(std::abs(d.z), 0.05);
    widest = std::max(widest, std::abs(d.x));
  }
  EXPECT_GT(widest, 0.04);  // actually uses the larger cube
}

TEST(SimReset, SameSeedIsIdentical) {
  for (auto k : {TaskKind::key_insertion, TaskKind::usb_insertion, TaskKind::spaghetti_probing}) {
    const TaskConfig cfg = TaskConfig::preset(k);
    EXPECT_EQ(sim_reset(cfg, 99), sim_reset(cfg, 99));
    EXPECT_NE(sim_reset(cfg, 99).ee_position, sim_reset(cfg, 100).ee_position);
  }
}

TEST(SimReset, ProbeObstaclesInDistinctCells) {
  const TaskConfig cfg = TaskConfig::preset(TaskKind::spaghetti_probing);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SimState s = sim_reset(cfg, seed);
    ASSERT_EQ(s.obstacles.size(), 6u);
    for (std::size_t i = 0; i < s.obstacles.size(); ++i) {
      const Obstacle& o = s.obstacles[i];
      ASSERT_GE(o.top_depth, 0.3 * cfg.insertion_depth_goal);
      ASSERT_LE(o.top_depth, 0.7 * cfg.insertion_depth_goal);
      for (std::size_t j = 0; j < i; ++j) {
        ASSERT_FALSE(o.column_x == s.obstacles[j].column_x && o.column_y == s.obstacles[j].column_y);
      }
    }
  }
}

TEST(SimStep, AlignedDescentInFreeSpaceIsForceFree) {
  const TaskConfig cfg = TaskConfig::preset(TaskKind::key_insertion);
  const Rollout r = drive(placed(cfg, {0, 0, 0.03}), cfg, {0, 0, -0.001}, 25);
  for (const auto& f : r.frames) {
    EXPECT_EQ(f.tactile, Force3{});
    EXPECT_EQ(f.wrench.force, Force3{});
    EXPECT_EQ(f.wrench.torque, Torque3{});
  }
}

TEST(SimStep, AlignedKeyInsertionSucceeds) {
  const TaskConfig cfg = TaskConfig::preset(TaskKind::key_insertion);
  const Rollout r = drive(placed(cfg, {0, 0, 0.005}), cfg, {0, 0, -0.001}, 100);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].kind, SimEventKind::success);
  EXPECT_TRUE(r.state.object_intact);
  EXPECT_DOUBLE_EQ(r.state.inserted_depth, cfg.insertion_depth_goal);
}

TEST(SimStep, LateralWallPushOfOneMillimetre) {
  TaskConfig cfg = TaskConfig::preset(TaskKind::key_insertion);
  cfg.friction_mu = 0.0;
  SimState s = placed(cfg, {0, 0, -0.005});
  s.mode = ContactMode::in_hole;
  // Move sideways until the tip sits 1 mm past the wall at +clearance.
  const StepResult out = sim_step(s, cfg, {cfg.clearance + 0.001, 0, 0}, 0.02);
  EXPECT_NEAR(out.frame.wrench.force.x, 5.0, 1e-9);
  EXPECT_NEAR(out.frame.wrench.force.norm(), 5.0, 1e-9);
  ASSERT_EQ(out.state.contacts.size(), 1u);
  EXPECT_NEAR(out.state.contacts[0].penetration, 0.001, 1e-12);
  EXPECT_EQ(out.state.contacts[0].normal, (Position3{-1, 0, 0}));
}

TEST(SimStep, FrictionOpposesTangentialMotion) {
  TaskConfig cfg = TaskConfig::preset(TaskKind::key_insertion);
  SimState s = placed(cfg, {cfg.clearance + 0.001, 0, -0.005});
  s.mode = ContactMode::in_hole;
  s.inserted_depth = 0.005;
  cfg.insertion_drag = 0.0;
  const StepResult out = sim_step(s, cfg, {0, 0, -0.001}, 0.02);
  // object pushes the wall down while moving down: load is along motion
  EXPECT_NEAR(out.frame.wrench.force.x, 5.0, 1e-9);
  EXPECT_NEAR(out.frame.wrench.force.z, -0.4 * 5.0, 1e-9);
}

TEST(SimStep, MisalignedKeyFractures) {
  // Oracle: the bevel load grows linearly with depth, so the grip torque
  // does too; drive until it crosses the limit.
  const TaskConfig cfg = TaskConfig::preset(TaskKind::key_insertion);
  const Rollout r = drive(placed(cfg, {2 * cfg.clearance, 0, 0.002}), cfg, {0, 0, -0.001}, 500);
  ASSERT_FALSE(r.events.empty());
  EXPECT_EQ(r.events.back().kind, SimEventKind::fracture);
  EXPECT_FALSE(r.state.object_intact);
  EXPECT_LT(r.frames.size(), 500u);
  double prev = -1.0;
  for (const auto& f : r.frames) {
    const double torque = grip_bending_torque(f.wrench, cfg);
    ASSERT_GE(torque, prev - 1e-12);
    prev = torque;
  }
  EXPECT_GT(prev, cfg.fracture_torque);
}

TEST(SimStep, TerminalEventsAreAbsorbing) {
  const TaskConfig cfg = TaskConfig::preset(TaskKind::key_insertion);
  const Rollout r = drive(placed(cfg, {0, 0, 0.001}), cfg, {0, 0, -0.002}, 100);
  ASSERT_TRUE(r.state.terminal);
  EXPECT_THROW(sim_step(r.state, cfg, {0, 0, 0}, 0.02), TerminalStateError);
}

TEST(SimStep, RejectsOversizedActionAndBadDt) {
  const TaskConfig cfg = TaskConfig::preset(TaskKind::key_insertion);
  const SimState s = sim_reset(cfg, 3);
  EXPECT_THROW(sim_step(s, cfg, {0.006, 0, 0}, 0.02), std::invalid_argument);
  EXPECT_THROW(sim_step(s, cfg, {0, 0, 0}, 0.0), std::invalid_argument);
  EXPECT_NO_THROW(sim_step(s, cfg, clamp_step({0.006, 0.006, 0}, cfg.max_step), 0.02));
}

class RandomWalk : public ::testing::TestWithParam<TaskKind> {};

TEST_P(RandomWalk, InvariantsHold) {
  TaskConfig cfg = TaskConfig::preset(GetParam());
  cfg.fingertip_rotation = Rotation3::about_x(0.3) * Rotation3::about_z(-1.1);
  cfg.fracture_torque = std::numeric_limits<double>::infinity();
  cfg.buckling_force = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SimState s = sim_reset(cfg, seed);
    s.ee_position = {s.ee_position.x * 0.05, s.ee_position.y * 0.05, 0.002};
    Rng walk(seed + 1000);
    double prev_t = s.clock;
    for (int i = 0; i < 300 && !s.terminal; ++i) {
      const Position3 a = clamp_step({walk.uniform(-0.001, 0.001), walk.uniform(-0.001, 0.001), walk.uniform(-0.0012, 0.0006)},
                                     cfg.max_step);
      StepResult out = sim_step(s, cfg, a, 0.02);
      const SensorFrame& f = out.frame;
      ASSERT_TRUE(f.finite());
      ASSERT_GT(f.t, prev_t);
      prev_t = f.t;
      ASSERT_GE(out.state.inserted_depth, 0.0);
      ASSERT_LE(out.state.inserted_depth, cfg.insertion_depth_goal);
      // force-side consistency
      const Force3 world = cfg.fingertip_rotation * f.tactile;
      ASSERT_NEAR(world.x, f.wrench.force.x, 1e-9);
      ASSERT_NEAR(world.y, f.wrench.force.y, 1e-9);
      ASSERT_NEAR(world.z, f.wrench.force.z, 1e-9);
      // passivity: the environment pushes back out along each contact normal,
      // so the object's load has a non-positive component along the normal.
      for (const auto& c : out.state.contacts) {
        ASSERT_GT(c.penetration, 0.0);
        ASSERT_NEAR(c.normal.norm(), 1.0, 1e-12);
      }
      s = std::move(out.state);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllTasks, RandomWalk,
                         ::testing::Values(TaskKind::key_insertion, TaskKind::usb_insertion, TaskKind::spaghetti_probing),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(SimStep, NormalLoadsPushIntoSurfaces) {
  // Passivity with friction off: net load along each contact's inward
  // normal is non-negative.
  TaskConfig cfg = TaskConfig::preset(TaskKind::key_insertion);
  cfg.friction_mu = 0.0;
  cfg.insertion_drag = 0.0;
  cfg.fracture_torque = std::numeric_limits<double>::infinity();
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    SimState s = placed(cfg, {rng.uniform(-0.004, 0.004), rng.uniform(-0.004, 0.004), 0.001});
    for (int i = 0; i < 10 && !s.terminal; ++i) {
      StepResult out = sim_step(s, cfg, {0, 0, -0.001}, 0.02);
      if (out.state.contacts.size() == 1) {
        const Position3& n = out.state.contacts[0].normal;
        const Force3& f = out.frame.wrench.force;
        ASSERT_GE(-(n.x * f.x + n.y * f.y + n.z * f.z), 0.0);
      }
      s = std::move(out.state);
    }
  }
}

TEST(SimStep, SameInputsSameOutputsBitwise) {
  TaskConfig cfg = TaskConfig::preset(TaskKind::usb_insertion);
  cfg.sensor_noise_std = 0.05;
  auto run = [&] {
    SimState s = sim_reset(cfg, 42);
    s.ee_position = {0.0001, 0.0, 0.003};
    std::vector<SensorFrame> frames;
    while (!s.terminal) {
      StepResult out = sim_step(s, cfg, {0, 0, -0.0005}, 0.02);
      frames.push_back(out.frame);
      s = std::move(out.state);
    }
    return std::make_pair(s, frames);
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(SimStep, UsbRetentionPlateau) {
  TaskConfig cfg = TaskConfig::preset(TaskKind::usb_insertion);
  SimState s = placed(cfg, {0, 0, 0.0});
  double early = 0.0, late = 0.0;
  while (!s.terminal) {
    StepResult out = sim_step(s, cfg, {0, 0, -0.0005}, 0.02);
    const double depth = out.state.inserted_depth;
    if (depth > 0.002 && depth < 0.009) early = -out.frame.wrench.force.z;
    if (depth > 0.0105) late = -out.frame.wrench.force.z;
    s = std::move(out.state);
  }
  EXPECT_NEAR(early, cfg.insertion_drag, 1e-9);
  EXPECT_NEAR(late, cfg.insertion_drag + 8.0, 1e-9);
}

class ProbeField : public ::testing::Test {
 protected:
  TaskConfig cfg = TaskConfig::preset(TaskKind::spaghetti_probing);

  // Column centre in task coordinates.
  Position3 centre(int ix, int iy, double z) const {
    const double half = 0.5 * cfg.grid_cells * cfg.cell_size;
    return {-half + (ix + 0.5) * cfg.cell_size, -half + (iy + 0.5) * cfg.cell_size, z};
  }
};

TEST_F(ProbeField, RejectsOtherTasks) {
  const TaskConfig key = TaskConfig::preset(TaskKind::key_insertion);
  EXPECT_THROW(probe_field(sim_reset(key, 0), key), std::invalid_argument);
}

TEST_F(ProbeField, FreeColumnReachesBottomBelowBuckling) {
  SimState s = sim_reset(cfg, 7);
  int fx = -1, fy = -1;
  for (int c = 0; c < 25 && fx < 0; ++c) {
    bool blocked = false;
    for (const auto& o : s.obstacles) blocked = blocked || (o.column_x == c % 5 && o.column_y == c / 5);
    if (!blocked) fx = c % 5, fy = c / 5;
  }
  s.ee_position = centre(fx, fy, 0.001);
  const ResistanceProfile p = probe_field(s, cfg);
  EXPECT_FALSE(p.obstacle_top_depth.has_value());
  const Rollout r = drive(s, cfg, {0, 0, -0.002}, 200);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].kind, SimEventKind::success);
  double max_axial = 0.0;
  for (const auto& f : r.frames) max_axial = std::max(max_axial, std::abs(f.wrench.force.z));
  // Oracle: drag·(1 + depth/depth_total) peaks at twice the drag.
  EXPECT_LE(max_axial, 2.0 * cfg.granular_drag + 1e-12);
  EXPECT_LT(max_axial, cfg.buckling_force);
}

TEST_F(ProbeField, ObstacleColumnBucklesProbe) {
  SimState s = sim_reset(cfg, 7);
  const Obstacle o = s.obstacles.front();
  s.ee_position = centre(o.column_x, o.column_y, 0.001);
  const ResistanceProfile p = probe_field(s, cfg);
  ASSERT_TRUE(p.obstacle_top_depth.has_value());
  EXPECT_DOUBLE_EQ(*p.obstacle_top_depth, o.top_depth);
  EXPECT_GT(p.axial_resistance(o.top_depth + 0.001), cfg.buckling_force);
  const Rollout r = drive(s, cfg, {0, 0, -0.0005}, 400);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].kind, SimEventKind::fracture);
  EXPECT_GT(-r.frames.back().ee_position.z, o.top_depth);
  EXPECT_LT(-r.frames.back().ee_position.z, o.top_depth + 0.002);
}

TEST_F(ProbeField, ZeroDescentZeroAxialForce) {
  SimState s = sim_reset(cfg, 7);
  s.ee_position = centre(2, 2, -0.01);
  s.mode = ContactMode::in_hole;
  const ResistanceProfile p = probe_field(s, cfg);
  EXPECT_EQ(p.axial_resistance(0.0), 0.0);
  const StepResult out = sim_step(s, cfg, {0, 0, 0}, 0.02);
  EXPECT_EQ(out.frame.wrench.force.z, 0.0);
}

TEST_F(ProbeField, LateralMoveChangesColumn) {
  SimState s = sim_reset(cfg, 7);
  s.ee_position = centre(1, 1, 0.001);
  const ResistanceProfile a = probe_field(s, cfg);
  s.ee_position = centre(2, 1, 0.001);
  const ResistanceProfile b = probe_field(s, cfg);
  EXPECT_EQ(a.column_x, 1);
  EXPECT_EQ(b.column_x, 2);
  EXPECT_EQ(a.column_y, b.column_y);
}

}  // namespace
}  // namespace hapcompass::sim
