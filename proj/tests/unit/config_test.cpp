#include "hapcompass/app/run_config.hpp"

#include <cmath>
#include <fstream>

#include <gtest/gtest.h>
#include <unistd.h>

#include "hapcompass/core/errors.hpp"

namespace hapcompass::app {
namespace {

TEST(RunConfig, DefaultsRoundTrip) {
  for (auto kind : {sim::TaskKind::key_insertion, sim::TaskKind::usb_insertion, sim::TaskKind::spaghetti_probing}) {
    const json doc = to_json(default_run_config(kind));
    EXPECT_EQ(to_json(run_config_from_json(doc)), doc) << sim::to_string(kind);
  }
}

TEST(RunConfig, EmptyDocumentIsKeyDefaults) {
  const RunConfig c = run_config_from_json(json::object());
  EXPECT_EQ(to_json(c), to_json(default_run_config()));
  EXPECT_EQ(c.experiment.session.pipeline.rotation, experiment::task_rotation(sim::TaskKind::key_insertion));
}

TEST(RunConfig, TaskKindSelectsPresetAndMapping) {
  const RunConfig c = run_config_from_json({{"task", {{"kind", "usb"}}}});
  EXPECT_EQ(c.experiment.session.task.kind, sim::TaskKind::usb_insertion);
  EXPECT_EQ(c.experiment.session.task.clearance, sim::TaskConfig::preset(sim::TaskKind::usb_insertion).clearance);
  EXPECT_EQ(c.experiment.session.pipeline.rotation, experiment::task_rotation(sim::TaskKind::usb_insertion));
}

TEST(RunConfig, OverridesLandInTheirSections) {
  const json doc = {
      {"seed", 42},
      {"output_dir", "runs/a"},
      {"task", {{"clearance", 0.3e-3}, {"fracture_torque", "inf"}, {"nominal_start", {0.0, 0.001, 0.03}}}},
      {"pipeline", {{"rotation", {0, 1, 0, -1, 0, 0, 0, 0, 1}}, {"gain_k", 0.05}}},
      {"device", {{"angular_velocity_limit_deg_s", 300.0}, {"half_rotation", true}}},
      {"session", {{"condition", "c2"}}},
      {"operator", {{"stable_tracking", false}}},
      {"experiment", {{"conditions", {"C1", "C4"}}, {"episodes", 3}}},
      {"metrics", {{"contact_threshold", 1.5}}},
      {"afc", {{"n_choices", 4}, {"kappa", "inf"}}},
      {"learning", {{"demo_mode", "nonreactive"}, {"policy", {{"horizon", 8}, {"replan", 4}}}, {"train", {{"epochs", 7}}}}},
      {"serve", {{"clock", "stepped"}, {"ws_port", 9000}}},
  };
  const RunConfig c = run_config_from_json(doc);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.experiment.seed, 42u);
  EXPECT_EQ(c.session().seed, 42u);
  EXPECT_EQ(c.learning.train.seed, 42u);
  EXPECT_EQ(c.output_dir, "runs/a");
  EXPECT_DOUBLE_EQ(c.experiment.session.task.clearance, 0.3e-3);
  EXPECT_TRUE(std::isinf(c.experiment.session.task.fracture_torque));
  EXPECT_EQ(c.experiment.session.task.nominal_start, (Position3{0.0, 0.001, 0.03}));
  EXPECT_EQ(c.experiment.session.pipeline.rotation, Rotation3({0, 1, 0, -1, 0, 0, 0, 0, 1}));
  EXPECT_DOUBLE_EQ(c.experiment.session.pipeline.gain_k, 0.05);
  EXPECT_DOUBLE_EQ(c.experiment.session.device.angular_velocity_limit, deg2rad(300.0));
  EXPECT_TRUE(c.experiment.session.device.half_rotation);
  EXPECT_EQ(c.experiment.session.condition, haptics::Condition::device_vibration);
  EXPECT_FALSE(c.experiment.op.stable_tracking);
  EXPECT_EQ(c.experiment.conditions,
            (std::vector<haptics::Condition>{haptics::Condition::vision_only, haptics::Condition::directional}));
  EXPECT_EQ(c.experiment.episodes, 3);
  EXPECT_DOUBLE_EQ(c.experiment.contact_threshold, 1.5);
  EXPECT_EQ(c.afc.n_choices, 4);
  EXPECT_TRUE(std::isinf(c.afc.kappa));
  EXPECT_EQ(c.learning.demo_mode, learning::DemoMode::nonreactive);
  EXPECT_EQ(c.learning.train.shape.horizon, 8);
  EXPECT_EQ(c.learning.train.epochs, 7);
  EXPECT_EQ(c.serve.clock, transport::ClockMode::stepped);
  EXPECT_EQ(c.serve.ws_port, 9000);

  const json out = to_json(c);
  EXPECT_EQ(out["task"]["fracture_torque"], "inf");
  EXPECT_EQ(to_json(run_config_from_json(out)), out);
}

void expect_rejected(const json& doc, const std::string& fragment) {
  try {
    run_config_from_json(doc);
    ADD_FAILURE() << "accepted " << doc.dump();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(RunConfig, RejectsBadDocuments) {
  expect_rejected(json::array(), "object");
  expect_rejected({{"colour", 1}}, "colour");
  expect_rejected({{"pipeline", {{"gain", 0.1}}}}, "pipeline.gain");
  expect_rejected({{"learning", {{"train", {{"lr", 0.1}}}}}}, "learning.train.lr");
  expect_rejected({{"pipeline", {{"gain_k", "big"}}}}, "pipeline.gain_k");
  expect_rejected({{"pipeline", {{"rotation", {1, 0, 0, 0, 1, 0, 0, 0, 2}}}}}, "pipeline.rotation");
  expect_rejected({{"pipeline", {{"rotation", {1, 0, 0}}}}}, "pipeline.rotation");
  expect_rejected({{"seed", -1}}, "seed");
  expect_rejected({{"seed", 1.5}}, "seed");
  expect_rejected({{"session", {{"condition", "C5"}}}}, "session.condition");
  expect_rejected({{"task", {{"kind", "door"}}}}, "task.kind");
  expect_rejected({{"experiment", {{"episodes", 0}}}}, "episodes");
  expect_rejected({{"experiment", {{"conditions", "C1"}}}}, "experiment.conditions");
  expect_rejected({{"afc", {{"n_choices", 6}}}}, "n_choices");
  expect_rejected({{"serve", {{"tcp_port", 70000}}}}, "serve.tcp_port");
  expect_rejected({{"serve", {{"clock", "wall"}}}}, "serve.clock");
  expect_rejected({{"operator", {{"descent_speed", 0}}}}, "operator");
  expect_rejected({{"learning", {{"policy", {{"replan", 20}}}}}}, "replan");
}

TEST(SetPath, ParsesJsonOrKeepsString) {
  json doc = json::object();
  set_path(doc, "pipeline.gain_k", "0.03");
  set_path(doc, "task.kind", "usb");
  set_path(doc, "experiment.conditions", "[\"C1\",\"C4\"]");
  set_path(doc, "task.fracture_torque", "inf");
  EXPECT_EQ(doc["pipeline"]["gain_k"], 0.03);
  EXPECT_EQ(doc["task"]["kind"], "usb");
  EXPECT_EQ(doc["experiment"]["conditions"].size(), 2u);
  const RunConfig c = run_config_from_json(doc);
  EXPECT_TRUE(std::isinf(c.experiment.session.task.fracture_torque));
  EXPECT_THROW(set_path(doc, "a..b", "1"), ConfigError);
  EXPECT_THROW(set_path(doc, "", "1"), ConfigError);
}

TEST(LoadRunConfig, ReadsFilesAndReportsSyntaxErrors) {
  const auto dir = std::filesystem::temp_directory_path() / ("hapcompass_cfg_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "ok.json") << R"({"seed": 5, "afc": {"repetitions": 3}})";
    std::ofstream(dir / "bad.json") << R"({"seed": 5,)";
  }
  const RunConfig c = load_run_config(dir / "ok.json");
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.afc.repetitions, 3);
  EXPECT_THROW(load_run_config(dir / "bad.json"), ConfigError);
  EXPECT_THROW(load_run_config(dir / "missing.json"), ConfigError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace hapcompass::app
