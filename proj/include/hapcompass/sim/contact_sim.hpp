#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hapcompass/core/frames.hpp"
#include "hapcompass/core/rng.hpp"
#include "hapcompass/core/units.hpp"

namespace hapcompass::sim {

enum class TaskKind { key_insertion, usb_insertion, spaghetti_probing };

std::string_view to_string(TaskKind kind);
/// Accepts "key", "usb", "spaghetti" and the full enum names.
TaskKind parse_task_kind(std::string_view name);

// Task frame: the hole (or container) axis is the z axis, the lock face or
// container top is the plane z = 0, and insertion moves toward −z. The
// end-effector position is the tool tip; the F/T sensor sits tool_length
// above it and the grip point object_length above it.
struct TaskConfig {
  TaskKind kind = TaskKind::key_insertion;
  double clearance = 0.5e-3;             // m, half gap along x (the bending-critical axis)
  double secondary_clearance = 2.0e-3;   // m, half gap along y
  double bevel_width = 1.0e-3;           // m, 45° chamfer around the hole mouth
  double wall_stiffness = 5000.0;        // N/m
  double friction_mu = 0.4;
  double fracture_torque = 6.0;          // N·m about bending_axis; infinity disables
  double buckling_force = 0.0;           // N axial (probe only; infinity elsewhere)
  double insertion_depth_goal = 15e-3;   // m
  double start_cube_half_extent = 0.025; // m
  int obstacle_count = 0;

  Position3 nominal_start{0.0, 0.0, 0.035};
  double tool_length = 0.20;             // F/T origin -> tool tip, m
  double object_length = 0.05;           // grip point -> tool tip, m
  Position3 bending_axis{0.0, 1.0, 0.0}; // unit
  double insertion_drag = 3.0;           // N while advancing inside the hole
  double retention_force = 0.0;          // N plateau over the final retention_length
  double retention_length = 0.0;         // m
  double granular_drag = 0.5;            // N, probe medium
  int grid_cells = 5;                    // probe grid is grid_cells × grid_cells columns
  double cell_size = 0.02;               // m
  double obstacle_min_depth = 0.3;       // fraction of container depth
  double obstacle_max_depth = 0.7;

  double max_step = 0.005;               // m per tick
  Rotation3 fingertip_rotation;          // world -> fingertip frame is its transpose
  Force3 tactile_offset;                 // constant skin offset added to the tactile reading
  double sensor_noise_std = 0.0;         // N, per tactile component
  double max_episode_s = 30.0;

  void validate() const;

  static TaskConfig preset(TaskKind kind);
};

/// Where the tool tip currently is relative to the hole (hole tasks only).
enum class ContactMode : std::uint8_t { free, in_hole, on_rim };

struct ContactPoint {
  Position3 position;
  Position3 normal;  // unit, out of the environment surface
  double penetration = 0.0;

  friend constexpr bool operator==(const ContactPoint&, const ContactPoint&) = default;
};

struct Obstacle {
  int column_x = 0;
  int column_y = 0;
  double top_depth = 0.0;  // m below the container top; the block extends to the bottom

  friend constexpr bool operator==(const Obstacle&, const Obstacle&) = default;
};

struct SimState {
  Position3 ee_position;
  bool object_intact = true;
  double inserted_depth = 0.0;
  std::vector<ContactPoint> contacts;
  Rng rng;
  double clock = 0.0;
  ContactMode mode = ContactMode::free;
  bool terminal = false;
  std::vector<Obstacle> obstacles;

  friend bool operator==(const SimState&, const SimState&) = default;
};

enum class SimEventKind { success, fracture };

std::string_view to_string(SimEventKind kind);

struct SimEvent {
  double t = 0.0;
  SimEventKind kind = SimEventKind::success;

  friend constexpr bool operator==(const SimEvent&, const SimEvent&) = default;
};

struct StepResult {
  SimState state;
  SensorFrame frame;
  std::vector<SimEvent> events;
};

/// Samples the tool tip uniformly in the start cube around the nominal
/// pre-insertion pose and, for probing, places obstacles in seeded columns.
SimState sim_reset(const TaskConfig& cfg, std::uint64_t seed);

/// Sensor frame for a state without advancing it (zero motion).
SensorFrame observe(const SimState& state, const TaskConfig& cfg);

/// Quasi-static penalty step. Throws TerminalStateError after success or
/// fracture, std::invalid_argument if |action| exceeds max_step or dt <= 0.
StepResult sim_step(const SimState& state, const TaskConfig& cfg, const Position3& action, double dt);

/// Clamps an action to the simulator's per-tick step bound, keeping direction.
Position3 clamp_step(const Position3& action, double max_step);

/// Bending torque at the grip point about the configured bending axis.
double grip_bending_torque(const Wrench& wrench, const TaskConfig& cfg);

/// Offset from the F/T origin to the grip point.
Position3 grip_offset(const TaskConfig& cfg);

/// Axial resistance of the probe column under the tool tip.
struct ResistanceProfile {
  bool inside_container = false;
  int column_x = -1;
  int column_y = -1;
  std::optional<double> obstacle_top_depth;
  double container_depth = 0.0;
  double granular_drag = 0.0;
  double wall_stiffness = 0.0;

  /// Quasi-static axial force (N, magnitude) while descending at `depth`.
  double axial_resistance(double depth) const;
};

/// Requires cfg.kind == spaghetti_probing (throws std::invalid_argument otherwise).
ResistanceProfile probe_field(const SimState& state, const TaskConfig& cfg);

}  // namespace hapcompass::sim
