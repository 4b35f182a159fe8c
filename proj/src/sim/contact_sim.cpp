#include "hapcompass/sim/contact_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "hapcompass/core/errors.hpp"

namespace hapcompass::sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMotionEps = 1e-12;

// One penalty contact: where, which way the held object pushes the
// environment, and how hard.
struct Load {
  ContactPoint point;
  Force3 force;
};

Force3 as_force(const Position3& dir, double magnitude) { return {dir.x * magnitude, dir.y * magnitude, dir.z * magnitude}; }

Position3 unit(const Position3& v) {
  const double n = v.norm();
  return n > 0.0 ? v / n : Position3{};
}

// Adds a normal contact with Coulomb friction. `load_dir` is the unit
// direction the object presses into the surface.
void add_normal_contact(std::vector<Load>& loads, const Position3& at, const Position3& load_dir, double penetration,
                        const Position3& motion, const TaskConfig& cfg) {
  if (penetration <= 0.0) return;
  const double normal_force = cfg.wall_stiffness * penetration;
  Force3 f = as_force(load_dir, normal_force);
  const Position3 tangential = motion - load_dir * dot(motion, load_dir);
  if (tangential.norm() > kMotionEps) f += as_force(unit(tangential), cfg.friction_mu * normal_force);
  loads.push_back({ContactPoint{at, -load_dir, penetration}, f});
}

bool within_hole(const Position3& tip, const TaskConfig& cfg) {
  return std::abs(tip.x) <= cfg.clearance && std::abs(tip.y) <= cfg.secondary_clearance;
}

ContactMode next_mode(ContactMode current, const Position3& tip, const TaskConfig& cfg) {
  if (tip.z >= 0.0) return ContactMode::free;
  if (current == ContactMode::free) return within_hole(tip, cfg) ? ContactMode::in_hole : ContactMode::on_rim;
  if (current == ContactMode::on_rim && within_hole(tip, cfg)) return ContactMode::in_hole;
  return current;
}

void hole_loads(std::vector<Load>& loads, ContactMode mode, const Position3& tip, const Position3& motion,
                double inserted_depth, const TaskConfig& cfg) {
  if (mode == ContactMode::free) return;
  const double depth = -tip.z;
  const std::array<double, 2> offset{tip.x, tip.y};
  const std::array<double, 2> gap{cfg.clearance, cfg.secondary_clearance};
  const std::array<Position3, 2> axis{Position3{1, 0, 0}, Position3{0, 1, 0}};
  const Position3 down{0, 0, -1};

  if (mode == ContactMode::on_rim) {
    bool on_face = false;
    for (std::size_t a = 0; a < 2; ++a) on_face = on_face || std::abs(offset[a]) - gap[a] >= cfg.bevel_width;
    if (on_face) {
      add_normal_contact(loads, tip, down, depth, motion, cfg);
      return;
    }
    for (std::size_t a = 0; a < 2; ++a) {
      const double outside = std::abs(offset[a]) - gap[a];
      if (outside <= 0.0) continue;
      const double side = offset[a] > 0.0 ? 1.0 : -1.0;
      const Position3 dir = unit(axis[a] * side + down);
      add_normal_contact(loads, tip, dir, (outside + depth - cfg.bevel_width) / std::sqrt(2.0), motion, cfg);
    }
    return;
  }

  for (std::size_t a = 0; a < 2; ++a) {
    const double outside = std::abs(offset[a]) - gap[a];
    if (outside <= 0.0) continue;
    add_normal_contact(loads, tip, axis[a] * (offset[a] > 0.0 ? 1.0 : -1.0), outside, motion, cfg);
  }
  if (motion.z < -kMotionEps) {
    double axial = cfg.insertion_drag;
    if (cfg.retention_length > 0.0 && inserted_depth >= cfg.insertion_depth_goal - cfg.retention_length) {
      axial += cfg.retention_force;
    }
    if (axial > 0.0) loads.push_back({ContactPoint{tip, Position3{0, 0, 1}, 0.0}, Force3{0, 0, -axial}});
  }
}

struct Column {
  bool inside = false;
  int ix = -1;
  int iy = -1;
};

Column column_at(const Position3& tip, const TaskConfig& cfg) {
  const double half = 0.5 * cfg.grid_cells * cfg.cell_size;
  if (std::abs(tip.x) >= half || std::abs(tip.y) >= half) return {};
  const int ix = std::clamp(static_cast<int>(std::floor((tip.x + half) / cfg.cell_size)), 0, cfg.grid_cells - 1);
  const int iy = std::clamp(static_cast<int>(std::floor((tip.y + half) / cfg.cell_size)), 0, cfg.grid_cells - 1);
  return {true, ix, iy};
}

std::optional<double> obstacle_top(const std::vector<Obstacle>& obstacles, const Column& col) {
  for (const auto& o : obstacles) {
    if (o.column_x == col.ix && o.column_y == col.iy) return o.top_depth;
  }
  return std::nullopt;
}

double granular_drag_at(double depth, const TaskConfig& cfg) {
  return cfg.granular_drag * (1.0 + std::clamp(depth / cfg.insertion_depth_goal, 0.0, 1.0));
}

void probe_loads(std::vector<Load>& loads, const Position3& tip, const Position3& motion,
                 const std::vector<Obstacle>& obstacles, const TaskConfig& cfg) {
  const double depth = -tip.z;
  if (depth <= 0.0) return;
  const Position3 down{0, 0, -1};
  const Column col = column_at(tip, cfg);
  if (!col.inside) {
    add_normal_contact(loads, tip, down, depth, motion, cfg);
    return;
  }
  // granular medium: drag only while moving
  const double drag = granular_drag_at(depth, cfg);
  if (motion.z < -kMotionEps) loads.push_back({ContactPoint{tip, Position3{0, 0, 1}, 0.0}, Force3{0, 0, -drag}});
  const Position3 lateral{motion.x, motion.y, 0.0};
  if (lateral.norm() > kMotionEps) {
    const Position3 dir = unit(lateral);
    loads.push_back({ContactPoint{tip, -dir, 0.0}, as_force(dir, cfg.granular_drag)});
  }

  const auto top = obstacle_top(obstacles, col);
  if (!top || depth <= *top) return;
  // Inside a rigid block: push against the nearest face.
  const double half = 0.5 * cfg.grid_cells * cfg.cell_size;
  const double x0 = -half + col.ix * cfg.cell_size, y0 = -half + col.iy * cfg.cell_size;
  struct Face {
    double pen;
    Position3 dir;
  };
  const std::array<Face, 5> faces{{
      {depth - *top, down},
      {tip.x - x0, Position3{1, 0, 0}},
      {x0 + cfg.cell_size - tip.x, Position3{-1, 0, 0}},
      {tip.y - y0, Position3{0, 1, 0}},
      {y0 + cfg.cell_size - tip.y, Position3{0, -1, 0}},
  }};
  const auto nearest = std::min_element(faces.begin(), faces.end(), [](const Face& a, const Face& b) { return a.pen < b.pen; });
  add_normal_contact(loads, tip, nearest->dir, nearest->pen, motion, cfg);
}

struct Evaluation {
  ContactMode mode;
  std::vector<Load> loads;
  double inserted_depth;
};

Evaluation evaluate(const SimState& prev, const Position3& tip, const Position3& motion, const TaskConfig& cfg) {
  Evaluation ev{ContactMode::free, {}, 0.0};
  if (cfg.kind == TaskKind::spaghetti_probing) {
    ev.mode = tip.z < 0.0 ? ContactMode::in_hole : ContactMode::free;
    ev.inserted_depth = std::clamp(-tip.z, 0.0, cfg.insertion_depth_goal);
    probe_loads(ev.loads, tip, motion, prev.obstacles, cfg);
    return ev;
  }
  ev.mode = next_mode(prev.mode, tip, cfg);
  ev.inserted_depth = ev.mode == ContactMode::in_hole ? std::clamp(-tip.z, 0.0, cfg.insertion_depth_goal) : 0.0;
  hole_loads(ev.loads, ev.mode, tip, motion, ev.inserted_depth, cfg);
  return ev;
}

Position3 ft_origin(const Position3& tip, const TaskConfig& cfg) { return tip + Position3{0, 0, cfg.tool_length}; }

SensorFrame make_frame(const SimState& state, const std::vector<Load>& loads, const TaskConfig& cfg, Rng& rng) {
  SensorFrame frame;
  frame.t = state.clock;
  frame.ee_position = state.ee_position;
  const Position3 ft = ft_origin(state.ee_position, cfg);
  for (const auto& l : loads) {
    frame.wrench.force += l.force;
    frame.wrench.torque += moment(l.point.position - ft, l.force);
  }
  frame.tactile = cfg.fingertip_rotation.transpose() * frame.wrench.force + cfg.tactile_offset;
  if (cfg.sensor_noise_std > 0.0) {
    frame.tactile += Force3{rng.normal(), rng.normal(), rng.normal()} * cfg.sensor_noise_std;
  }
  return frame;
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::key_insertion: return "key_insertion";
    case TaskKind::usb_insertion: return "usb_insertion";
    case TaskKind::spaghetti_probing: return "spaghetti_probing";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "key" || name == "key_insertion") return TaskKind::key_insertion;
  if (name == "usb" || name == "usb_insertion") return TaskKind::usb_insertion;
  if (name == "spaghetti" || name == "spaghetti_probing" || name == "probe") return TaskKind::spaghetti_probing;
  throw ConfigError("unknown task '" + std::string(name) + "' (expected key, usb or spaghetti)");
}

std::string_view to_string(SimEventKind kind) { return kind == SimEventKind::success ? "success" : "fracture"; }

void TaskConfig::validate() const {
  if (!(clearance > 0.0) || !(secondary_clearance > 0.0)) throw ConfigError("task.clearance must be > 0");
  if (!(wall_stiffness > 0.0)) throw ConfigError("task.wall_stiffness must be > 0");
  if (!(friction_mu >= 0.0 && friction_mu <= 1.5)) throw ConfigError("task.friction_mu must be in [0, 1.5]");
  if (!(insertion_depth_goal > 0.0)) throw ConfigError("task.insertion_depth_goal must be > 0");
  if (!(start_cube_half_extent >= 0.0)) throw ConfigError("task.start_cube_half_extent must be >= 0");
  if (!(fracture_torque > 0.0) || !(buckling_force > 0.0)) throw ConfigError("task fracture limits must be > 0");
  if (!(max_step > 0.0)) throw ConfigError("task.max_step must be > 0");
  if (!(bevel_width >= 0.0)) throw ConfigError("task.bevel_width must be >= 0");
  if (std::abs(bending_axis.norm() - 1.0) > 1e-9) throw ConfigError("task.bending_axis must be a unit vector");
  if (!fingertip_rotation.is_valid(1e-9)) throw ConfigError("task.fingertip_rotation must be a rotation");
  if (!(tool_length > object_length && object_length > 0.0)) throw ConfigError("task requires tool_length > object_length > 0");
  if (!(max_episode_s > 0.0)) throw ConfigError("task.max_episode_s must be > 0");
  if (kind == TaskKind::spaghetti_probing) {
    if (grid_cells < 1 || !(cell_size > 0.0)) throw ConfigError("task probe grid must be non-empty");
    if (obstacle_count < 0 || obstacle_count > grid_cells * grid_cells) throw ConfigError("task.obstacle_count out of range");
    if (!(obstacle_min_depth >= 0.0 && obstacle_min_depth <= obstacle_max_depth && obstacle_max_depth < 1.0)) {
      throw ConfigError("task obstacle depth fractions must satisfy 0 <= min <= max < 1");
    }
  }
}

TaskConfig TaskConfig::preset(TaskKind kind) {
  TaskConfig c;
  c.kind = kind;
  switch (kind) {
    case TaskKind::key_insertion:
      c.buckling_force = kInf;
      break;
    case TaskKind::usb_insertion:
      c.clearance = 0.3e-3;
      c.secondary_clearance = 0.3e-3;
      c.bevel_width = 0.5e-3;
      c.fracture_torque = kInf;
      c.buckling_force = kInf;
      c.insertion_depth_goal = 12e-3;
      c.start_cube_half_extent = 0.05;
      c.nominal_start = {0.0, 0.0, 0.06};
      c.object_length = 0.04;
      c.insertion_drag = 1.0;
      c.retention_force = 8.0;
      c.retention_length = 2e-3;
      break;
    case TaskKind::spaghetti_probing:
      c.clearance = 1e-3;
      c.secondary_clearance = 1e-3;
      c.bevel_width = 0.0;
      c.fracture_torque = 0.3;
      c.buckling_force = 4.0;
      c.insertion_depth_goal = 0.08;
      c.start_cube_half_extent = 0.02;
      c.obstacle_count = 6;
      c.nominal_start = {0.0, 0.0, 0.03};
      c.tool_length = 0.27;
      c.object_length = 0.12;
      c.insertion_drag = 0.0;
      c.max_episode_s = 60.0;
      break;
  }
  return c;
}

SimState sim_reset(const TaskConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  SimState s;
  s.rng = Rng(seed);
  const double h = cfg.start_cube_half_extent;
  const double dx = s.rng.uniform(-h, h);
  const double dy = s.rng.uniform(-h, h);
  const double dz = s.rng.uniform(-h, h);
  s.ee_position = cfg.nominal_start + Position3{dx, dy, dz};
  if (cfg.kind == TaskKind::spaghetti_probing && cfg.obstacle_count > 0) {
    std::vector<int> cells(static_cast<std::size_t>(cfg.grid_cells * cfg.grid_cells));
    std::iota(cells.begin(), cells.end(), 0);
    s.rng.shuffle(std::span<int>(cells));
    for (int i = 0; i < cfg.obstacle_count; ++i) {
      const int cell = cells[static_cast<std::size_t>(i)];
      const double frac = s.rng.uniform(cfg.obstacle_min_depth, cfg.obstacle_max_depth);
      s.obstacles.push_back({cell % cfg.grid_cells, cell / cfg.grid_cells, frac * cfg.insertion_depth_goal});
    }
    std::sort(s.obstacles.begin(), s.obstacles.end(), [](const Obstacle& a, const Obstacle& b) {
      return a.column_y != b.column_y ? a.column_y < b.column_y : a.column_x < b.column_x;
    });
  }
  s.mode = next_mode(ContactMode::free, s.ee_position, cfg);
  return s;
}

SensorFrame observe(const SimState& state, const TaskConfig& cfg) {
  const Evaluation ev = evaluate(state, state.ee_position, Position3{}, cfg);
  Rng scratch = state.rng;
  return make_frame(state, ev.loads, cfg, scratch);
}

Position3 clamp_step(const Position3& action, double max_step) {
  const double n = action.norm();
  if (!(n > max_step)) return action;
  return action * (max_step / n);
}

Position3 grip_offset(const TaskConfig& cfg) { return {0.0, 0.0, cfg.object_length - cfg.tool_length}; }

double grip_bending_torque(const Wrench& wrench, const TaskConfig& cfg) {
  const Torque3 at_grip = wrench.torque - moment(grip_offset(cfg), wrench.force);
  return std::abs(project(cfg.bending_axis, at_grip));
}

StepResult sim_step(const SimState& state, const TaskConfig& cfg, const Position3& action, double dt) {
  if (state.terminal) throw TerminalStateError("simulator stepped after a terminal event");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!action.finite() || action.norm() > cfg.max_step * (1.0 + 1e-12)) {
    throw std::invalid_argument("action exceeds the per-tick step bound");
  }

  StepResult out{state, {}, {}};
  SimState& s = out.state;
  s.ee_position = state.ee_position + action;
  s.clock = state.clock + dt;
  const Evaluation ev = evaluate(state, s.ee_position, action, cfg);
  s.mode = ev.mode;
  s.inserted_depth = ev.inserted_depth;
  s.contacts.clear();
  for (const auto& l : ev.loads) {
    if (l.point.penetration > 0.0) s.contacts.push_back(l.point);
  }
  out.frame = make_frame(s, ev.loads, cfg, s.rng);

  const bool bent = grip_bending_torque(out.frame.wrench, cfg) > cfg.fracture_torque;
  const bool buckled = std::abs(out.frame.wrench.force.z) > cfg.buckling_force;
  if (bent || buckled) {
    s.object_intact = false;
    s.terminal = true;
    out.events.push_back({s.clock, SimEventKind::fracture});
  } else if (s.inserted_depth >= cfg.insertion_depth_goal && s.object_intact &&
             (cfg.kind == TaskKind::spaghetti_probing || s.mode == ContactMode::in_hole)) {
    s.terminal = true;
    out.events.push_back({s.clock, SimEventKind::success});
  }
  return out;
}

double ResistanceProfile::axial_resistance(double depth) const {
  if (!inside_container || depth <= 0.0) return 0.0;
  double f = granular_drag * (1.0 + std::clamp(depth / container_depth, 0.0, 1.0));
  if (obstacle_top_depth && depth > *obstacle_top_depth) f += wall_stiffness * (depth - *obstacle_top_depth);
  return f;
}

ResistanceProfile probe_field(const SimState& state, const TaskConfig& cfg) {
  if (cfg.kind != TaskKind::spaghetti_probing) throw std::invalid_argument("probe_field requires the probing task");
  const Column col = column_at(state.ee_position, cfg);
  ResistanceProfile p;
  p.inside_container = col.inside;
  p.column_x = col.ix;
  p.column_y = col.iy;
  p.container_depth = cfg.insertion_depth_goal;
  p.granular_drag = cfg.granular_drag;
  p.wall_stiffness = cfg.wall_stiffness;
  if (col.inside) p.obstacle_top_depth = obstacle_top(state.obstacles, col);
  return p;
}

}  // namespace hapcompass::sim
