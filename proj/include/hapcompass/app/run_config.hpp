#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hapcompass/experiment/runner.hpp"
#include "hapcompass/learning/demos.hpp"
#include "hapcompass/transport/service.hpp"

namespace hapcompass::app {

using json = nlohmann::json;

struct AfcConfig {
  int n_choices = 8;
  int repetitions = 2;        // trials per direction
  double kappa = 10.0;        // respondent concentration at full stimulus
  double attenuation_y = 0.7; // vertical stimulus attenuation

  void validate() const;
};

struct LearningConfig {
  int demos = 10;
  learning::DemoMode demo_mode = learning::DemoMode::reactive;
  learning::ExpertConfig expert;
  learning::TrainConfig train;
  int eval_episodes = 10;

  void validate() const;
};

struct ServeConfig {
  std::string bind = "127.0.0.1";
  std::uint16_t tcp_port = 7421;
  std::uint16_t ws_port = 7422;
  transport::ClockMode clock = transport::ClockMode::realtime;
  std::string ui_dir;
  std::string log;  // empty: <output_dir>/serve_<seed>.ndjson.gz
};

/// Everything a subcommand needs, resolved from defaults, an optional config
/// file and flags (in that order of precedence, flags last).
struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  experiment::ExperimentConfig experiment;  // .session holds task, pipeline, device, condition
  AfcConfig afc;
  LearningConfig learning;
  ServeConfig serve;

  void validate() const;
  transport::SessionConfig session() const;  // with the run seed applied
};

/// Defaults for a task, including its device mapping.
RunConfig default_run_config(sim::TaskKind kind = sim::TaskKind::key_insertion);

/// Overlays `j` onto the defaults. Unknown keys, wrong types and invalid
/// values throw ConfigError. Infinite limits are written as "inf".
RunConfig run_config_from_json(const json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// The fully resolved config; to_json(run_config_from_json(to_json(c))) == to_json(c).
json to_json(const RunConfig& cfg);

/// Sets one dotted key (e.g. "pipeline.gain_k") in a config document. The
/// value is parsed as JSON when possible, otherwise taken as a string.
void set_path(json& doc, const std::string& dotted, const std::string& value);

}  // namespace hapcompass::app
