#include "hapcompass/app/run_config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "hapcompass/core/errors.hpp"

namespace hapcompass::app {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

// Degrees survive a rad -> deg -> rad round trip only when the conversion
// noise is trimmed.
double round_deg(double deg) { return std::isfinite(deg) ? std::round(deg * 1e9) / 1e9 : deg; }

json vec(const Position3& v) { return json::array({v.x, v.y, v.z}); }
json vec(const Force3& v) { return json::array({v.x, v.y, v.z}); }

json rotation(const Rotation3& r) {
  json a = json::array();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) a.push_back(r(i, j));
  }
  return a;
}

// Strict view of one config section: every key must be consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section child(const char* key) {
    used_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, join(key));
  }

  void read(const char* key, double& out) { with(key, [&](const json& v) { out = to_double(v, join(key)); }); }
  void read(const char* key, bool& out) {
    with(key, [&](const json& v) {
      if (!v.is_boolean()) throw ConfigError(join(key) + " must be true or false");
      out = v.get<bool>();
    });
  }
  void read(const char* key, int& out) {
    with(key, [&](const json& v) {
      if (!v.is_number_integer()) throw ConfigError(join(key) + " must be an integer");
      const auto x = v.get<std::int64_t>();
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
        throw ConfigError(join(key) + " is out of range");
      }
      out = static_cast<int>(x);
    });
  }
  void read(const char* key, std::uint64_t& out) {
    with(key, [&](const json& v) {
      if (v.is_number_unsigned()) {
        out = v.get<std::uint64_t>();
      } else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        out = static_cast<std::uint64_t>(v.get<std::int64_t>());
      } else {
        throw ConfigError(join(key) + " must be a non-negative integer");
      }
    });
  }
  void read(const char* key, std::uint16_t& out) {
    std::uint64_t x = out;
    read(key, x);
    if (x > 65535) throw ConfigError(join(key) + " must be a port number");
    out = static_cast<std::uint16_t>(x);
  }
  void read(const char* key, std::string& out) {
    with(key, [&](const json& v) {
      if (!v.is_string()) throw ConfigError(join(key) + " must be a string");
      out = v.get<std::string>();
    });
  }
  template <class Tag>
  void read(const char* key, Vector3<Tag>& out) {
    with(key, [&](const json& v) {
      if (!v.is_array() || v.size() != 3) throw ConfigError(join(key) + " must be an array of 3 numbers");
      out = {to_double(v[0], join(key)), to_double(v[1], join(key)), to_double(v[2], join(key))};
    });
  }
  void read(const char* key, Rotation3& out) {
    with(key, [&](const json& v) {
      if (!v.is_array() || v.size() != 9) throw ConfigError(join(key) + " must be a row-major array of 9 numbers");
      std::array<double, 9> m{};
      for (std::size_t i = 0; i < 9; ++i) m[i] = to_double(v[i], join(key));
      try {
        out = Rotation3::from_row_major(m);
      } catch (const ConfigError& e) {
        throw ConfigError(join(key) + ": " + e.what());
      }
    });
  }
  void read(const char* key, std::vector<haptics::Condition>& out) {
    with(key, [&](const json& v) {
      if (!v.is_array()) throw ConfigError(join(key) + " must be an array of condition tags");
      out.clear();
      for (const auto& e : v) {
        if (!e.is_string()) throw ConfigError(join(key) + " must be an array of condition tags");
        try {
          out.push_back(haptics::parse_condition(e.get<std::string>()));
        } catch (const ConfigError& err) {
          throw ConfigError(join(key) + ": " + err.what());
        }
      }
    });
  }
  template <class Parse, class T>
  void read_named(const char* key, T& out, Parse parse) {
    std::string name;
    read(key, name);
    if (!has(key)) return;
    try {
      out = parse(name);
    } catch (const ConfigError& e) {
      throw ConfigError(join(key) + ": " + e.what());
    }
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!used_.count(key)) throw ConfigError("unknown config key " + join(key.c_str()));
    }
  }

  std::string join(const char* key) const { return path_.empty() ? std::string(key) : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? std::string("config") : path_; }

  template <class F>
  void with(const char* key, F f) {
    used_.insert(key);
    if (j_.contains(key)) f(j_.at(key));
  }

  static double to_double(const json& v, const std::string& at) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "infinity") return kInf;
      if (s == "-inf" || s == "-infinity") return -kInf;
    }
    throw ConfigError(at + " must be a number (or \"inf\")");
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void read_task(Section s, sim::TaskConfig& t) {
  std::string kind;
  s.read("kind", kind);
  s.read("clearance", t.clearance);
  s.read("secondary_clearance", t.secondary_clearance);
  s.read("bevel_width", t.bevel_width);
  s.read("wall_stiffness", t.wall_stiffness);
  s.read("friction_mu", t.friction_mu);
  s.read("fracture_torque", t.fracture_torque);
  s.read("buckling_force", t.buckling_force);
  s.read("insertion_depth_goal", t.insertion_depth_goal);
  s.read("start_cube_half_extent", t.start_cube_half_extent);
  s.read("obstacle_count", t.obstacle_count);
  s.read("nominal_start", t.nominal_start);
  s.read("tool_length", t.tool_length);
  s.read("object_length", t.object_length);
  s.read("bending_axis", t.bending_axis);
  s.read("insertion_drag", t.insertion_drag);
  s.read("retention_force", t.retention_force);
  s.read("retention_length", t.retention_length);
  s.read("granular_drag", t.granular_drag);
  s.read("grid_cells", t.grid_cells);
  s.read("cell_size", t.cell_size);
  s.read("obstacle_min_depth", t.obstacle_min_depth);
  s.read("obstacle_max_depth", t.obstacle_max_depth);
  s.read("max_step", t.max_step);
  s.read("fingertip_rotation", t.fingertip_rotation);
  s.read("tactile_offset", t.tactile_offset);
  s.read("sensor_noise_std", t.sensor_noise_std);
  s.read("max_episode_s", t.max_episode_s);
  s.finish();
}

json write_task(const sim::TaskConfig& t) {
  return {{"kind", sim::to_string(t.kind)},
          {"clearance", number(t.clearance)},
          {"secondary_clearance", number(t.secondary_clearance)},
          {"bevel_width", number(t.bevel_width)},
          {"wall_stiffness", number(t.wall_stiffness)},
          {"friction_mu", number(t.friction_mu)},
          {"fracture_torque", number(t.fracture_torque)},
          {"buckling_force", number(t.buckling_force)},
          {"insertion_depth_goal", number(t.insertion_depth_goal)},
          {"start_cube_half_extent", number(t.start_cube_half_extent)},
          {"obstacle_count", t.obstacle_count},
          {"nominal_start", vec(t.nominal_start)},
          {"tool_length", number(t.tool_length)},
          {"object_length", number(t.object_length)},
          {"bending_axis", vec(t.bending_axis)},
          {"insertion_drag", number(t.insertion_drag)},
          {"retention_force", number(t.retention_force)},
          {"retention_length", number(t.retention_length)},
          {"granular_drag", number(t.granular_drag)},
          {"grid_cells", t.grid_cells},
          {"cell_size", number(t.cell_size)},
          {"obstacle_min_depth", number(t.obstacle_min_depth)},
          {"obstacle_max_depth", number(t.obstacle_max_depth)},
          {"max_step", number(t.max_step)},
          {"fingertip_rotation", rotation(t.fingertip_rotation)},
          {"tactile_offset", vec(t.tactile_offset)},
          {"sensor_noise_std", number(t.sensor_noise_std)},
          {"max_episode_s", number(t.max_episode_s)}};
}

void read_operator(Section s, experiment::OperatorConfig& o) {
  s.read("visual_bias_std", o.visual_bias_std);
  s.read("tremor_std", o.tremor_std);
  s.read("stable_tracking_factor", o.stable_tracking_factor);
  s.read("stable_tracking", o.stable_tracking);
  s.read("approach_speed", o.approach_speed);
  s.read("descent_speed", o.descent_speed);
  s.read("hover_height", o.hover_height);
  s.read("overshoot", o.overshoot);
  s.read("direction_noise", o.direction_noise);
  s.read("lateral_cue_threshold", o.lateral_cue_threshold);
  s.read("correction_speed", o.correction_speed);
  s.read("force_limit_cue", o.force_limit_cue);
  s.read("retry_lift", o.retry_lift);
  s.read("retry_spread", o.retry_spread);
  s.read("max_retries", o.max_retries);
  s.finish();
}

json write_operator(const experiment::OperatorConfig& o) {
  return {{"visual_bias_std", number(o.visual_bias_std)},
          {"tremor_std", number(o.tremor_std)},
          {"stable_tracking_factor", number(o.stable_tracking_factor)},
          {"stable_tracking", o.stable_tracking},
          {"approach_speed", number(o.approach_speed)},
          {"descent_speed", number(o.descent_speed)},
          {"hover_height", number(o.hover_height)},
          {"overshoot", number(o.overshoot)},
          {"direction_noise", number(o.direction_noise)},
          {"lateral_cue_threshold", number(o.lateral_cue_threshold)},
          {"correction_speed", number(o.correction_speed)},
          {"force_limit_cue", number(o.force_limit_cue)},
          {"retry_lift", number(o.retry_lift)},
          {"retry_spread", number(o.retry_spread)},
          {"max_retries", o.max_retries}};
}

}  // namespace

void AfcConfig::validate() const {
  if (n_choices != 4 && n_choices != 8) throw ConfigError("afc.n_choices must be 4 or 8");
  if (repetitions <= 0) throw ConfigError("afc.repetitions must be > 0");
  if (!(kappa >= 0.0)) throw ConfigError("afc.kappa must be >= 0");
  if (!(attenuation_y >= 0.0 && attenuation_y <= 1.0)) throw ConfigError("afc.attenuation_y must be in [0, 1]");
}

void LearningConfig::validate() const {
  if (demos <= 0) throw ConfigError("learning.demos must be > 0");
  if (eval_episodes <= 0) throw ConfigError("learning.eval_episodes must be > 0");
  expert.validate();
  train.validate();
}

void RunConfig::validate() const {
  experiment.validate();
  afc.validate();
  learning.validate();
  if (serve.bind.empty()) throw ConfigError("serve.bind must not be empty");
}

transport::SessionConfig RunConfig::session() const {
  transport::SessionConfig s = experiment.session;
  s.seed = seed;
  return s;
}

RunConfig default_run_config(sim::TaskKind kind) {
  RunConfig c;
  c.experiment.session.task = sim::TaskConfig::preset(kind);
  c.experiment.session.pipeline.rotation = experiment::task_rotation(kind);
  return c;
}

RunConfig run_config_from_json(const json& j) {
  Section root(j, "");
  sim::TaskKind kind = sim::TaskKind::key_insertion;
  if (j.is_object() && j.contains("task") && j["task"].is_object() && j["task"].contains("kind")) {
    Section(j["task"], "task").read_named("kind", kind, sim::parse_task_kind);
  }
  RunConfig c = default_run_config(kind);
  transport::SessionConfig& session = c.experiment.session;

  root.read("seed", c.seed);
  root.read("output_dir", c.output_dir);
  read_task(root.child("task"), session.task);

  Section pipeline = root.child("pipeline");
  pipeline.read("rotation", session.pipeline.rotation);
  pipeline.read("gain_k", session.pipeline.gain_k);
  pipeline.read("contact_threshold", session.pipeline.contact_threshold);
  pipeline.read("recal_debounce", session.pipeline.recal_debounce);
  pipeline.read("amplitude_max", session.pipeline.amplitude_max);
  pipeline.read("deadband", session.pipeline.deadband);
  pipeline.finish();

  Section device = root.child("device");
  device.read("resonance_hz", session.device.waveform.resonance_hz);
  device.read("sample_rate_hz", session.device.waveform.sample_rate_hz);
  device.read("asymmetry_ratio", session.device.waveform.asymmetry_ratio);
  device.read("cycles_per_burst", session.device.waveform.cycles_per_burst);
  double limit_deg = rad2deg(session.device.angular_velocity_limit);
  device.read("angular_velocity_limit_deg_s", limit_deg);
  session.device.angular_velocity_limit = deg2rad(limit_deg);
  device.read("half_rotation", session.device.half_rotation);
  device.finish();

  Section sess = root.child("session");
  sess.read_named("condition", session.condition, haptics::parse_condition);
  sess.read("tick_dt", session.tick_dt);
  sess.read("retarget_scale", session.retarget_scale);
  sess.finish();

  read_operator(root.child("operator"), c.experiment.op);

  Section exp = root.child("experiment");
  exp.read("conditions", c.experiment.conditions);
  exp.read("episodes", c.experiment.episodes);
  exp.read("block_size", c.experiment.block_size);
  exp.finish();

  Section met = root.child("metrics");
  met.read("contact_threshold", c.experiment.contact_threshold);
  met.finish();

  Section afc = root.child("afc");
  afc.read("n_choices", c.afc.n_choices);
  afc.read("repetitions", c.afc.repetitions);
  afc.read("kappa", c.afc.kappa);
  afc.read("attenuation_y", c.afc.attenuation_y);
  afc.finish();

  Section learn = root.child("learning");
  learn.read("demos", c.learning.demos);
  learn.read_named("demo_mode", c.learning.demo_mode, learning::parse_demo_mode);
  learn.read("eval_episodes", c.learning.eval_episodes);
  Section expert = learn.child("expert");
  expert.read("descent_step", c.learning.expert.descent_step);
  expert.read("reactive_gain", c.learning.expert.reactive_gain);
  expert.read("lateral_noise", c.learning.expert.lateral_noise);
  expert.finish();
  Section policy = learn.child("policy");
  policy.read("hidden", c.learning.train.shape.hidden);
  policy.read("horizon", c.learning.train.shape.horizon);
  policy.read("replan", c.learning.train.shape.replan);
  policy.finish();
  Section train = learn.child("train");
  train.read("learning_rate", c.learning.train.learning_rate);
  train.read("momentum", c.learning.train.momentum);
  train.read("epochs", c.learning.train.epochs);
  train.finish();
  learn.finish();

  Section serve = root.child("serve");
  serve.read("bind", c.serve.bind);
  serve.read("tcp_port", c.serve.tcp_port);
  serve.read("ws_port", c.serve.ws_port);
  serve.read_named("clock", c.serve.clock, transport::parse_clock_mode);
  serve.read("ui_dir", c.serve.ui_dir);
  serve.read("log", c.serve.log);
  serve.finish();

  root.finish();
  c.experiment.seed = c.seed;
  c.experiment.session.seed = c.seed;
  c.learning.train.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

json to_json(const RunConfig& c) {
  const transport::SessionConfig& s = c.experiment.session;
  json conditions = json::array();
  for (auto cond : c.experiment.conditions) conditions.push_back(haptics::to_string(cond));
  return {
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"task", write_task(s.task)},
      {"pipeline",
       {{"rotation", rotation(s.pipeline.rotation)},
        {"gain_k", number(s.pipeline.gain_k)},
        {"contact_threshold", number(s.pipeline.contact_threshold)},
        {"recal_debounce", number(s.pipeline.recal_debounce)},
        {"amplitude_max", number(s.pipeline.amplitude_max)},
        {"deadband", number(s.pipeline.deadband)}}},
      {"device",
       {{"resonance_hz", number(s.device.waveform.resonance_hz)},
        {"sample_rate_hz", number(s.device.waveform.sample_rate_hz)},
        {"asymmetry_ratio", number(s.device.waveform.asymmetry_ratio)},
        {"cycles_per_burst", s.device.waveform.cycles_per_burst},
        {"angular_velocity_limit_deg_s", number(round_deg(rad2deg(s.device.angular_velocity_limit)))},
        {"half_rotation", s.device.half_rotation}}},
      {"session",
       {{"condition", haptics::to_string(s.condition)},
        {"tick_dt", number(s.tick_dt)},
        {"retarget_scale", number(s.retarget_scale)}}},
      {"operator", write_operator(c.experiment.op)},
      {"experiment",
       {{"conditions", conditions}, {"episodes", c.experiment.episodes}, {"block_size", c.experiment.block_size}}},
      {"metrics", {{"contact_threshold", number(c.experiment.contact_threshold)}}},
      {"afc",
       {{"n_choices", c.afc.n_choices},
        {"repetitions", c.afc.repetitions},
        {"kappa", number(c.afc.kappa)},
        {"attenuation_y", number(c.afc.attenuation_y)}}},
      {"learning",
       {{"demos", c.learning.demos},
        {"demo_mode", learning::to_string(c.learning.demo_mode)},
        {"eval_episodes", c.learning.eval_episodes},
        {"expert",
         {{"descent_step", number(c.learning.expert.descent_step)},
          {"reactive_gain", number(c.learning.expert.reactive_gain)},
          {"lateral_noise", number(c.learning.expert.lateral_noise)}}},
        {"policy",
         {{"hidden", c.learning.train.shape.hidden},
          {"horizon", c.learning.train.shape.horizon},
          {"replan", c.learning.train.shape.replan}}},
        {"train",
         {{"learning_rate", number(c.learning.train.learning_rate)},
          {"momentum", number(c.learning.train.momentum)},
          {"epochs", c.learning.train.epochs}}}}},
      {"serve",
       {{"bind", c.serve.bind},
        {"tcp_port", c.serve.tcp_port},
        {"ws_port", c.serve.ws_port},
        {"clock", transport::to_string(c.serve.clock)},
        {"ui_dir", c.serve.ui_dir},
        {"log", c.serve.log}}},
  };
}

void set_path(json& doc, const std::string& dotted, const std::string& value) {
  if (dotted.empty()) throw ConfigError("--set needs key=value");
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("bad config key '" + dotted + "'");
    if (!node->is_object()) *node = json::object();
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  const json parsed = json::parse(value, nullptr, false);
  *node = parsed.is_discarded() ? json(value) : parsed;
}

}  // namespace hapcompass::app
