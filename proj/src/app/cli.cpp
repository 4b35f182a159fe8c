#include "hapcompass/app/cli.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "hapcompass/app/run_config.hpp"
#include "hapcompass/core/errors.hpp"
#include "hapcompass/core/rng.hpp"
#include "hapcompass/metrics/afc.hpp"
#include "hapcompass/transport/log_io.hpp"

namespace hapcompass::app {

namespace fs = std::filesystem;

namespace {

// Seed streams derived from the run seed, so demos and evaluation episodes
// never share start poses.
constexpr std::uint64_t kDemoStream = 1;
constexpr std::uint64_t kEvalStream = 2;

struct Override {
  std::string path;
  std::string value;
  bool raw_string = false;
};

struct Globals {
  std::string config_file;
  std::vector<std::string> sets;
  std::vector<Override> flags;
  bool dry_run = false;
};

void bind(CLI::App* app, const std::string& flag, std::string path, const std::string& help, Globals& g,
          bool raw_string = false) {
  app->add_option_function<std::string>(
      flag, [&g, path, raw_string](const std::string& v) { g.flags.push_back({path, v, raw_string}); }, help);
}

RunConfig resolve(const Globals& g) {
  json doc = json::object();
  if (!g.config_file.empty()) {
    std::ifstream in(g.config_file);
    if (!in) throw ConfigError("cannot open config file " + g.config_file);
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(g.config_file + ": " + e.what());
    }
  }
  for (const auto& s : g.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    set_path(doc, s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& f : g.flags) {
    if (f.raw_string) {
      set_path(doc, f.path, json(f.value).dump());
    } else {
      set_path(doc, f.path, f.value);
    }
  }
  return run_config_from_json(doc);
}

fs::path output_dir(const RunConfig& c) {
  const fs::path dir(c.output_dir);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << std::setprecision(17);
  return os;
}

std::string provenance(const RunConfig& c) { return to_json(c).dump(); }

void print_summary(std::ostream& out, const std::vector<metrics::MetricsSummary>& rows) {
  out << std::left << std::setw(6) << "cond" << std::setw(20) << "task" << std::right << std::setw(9) << "success"
      << std::setw(11) << "time_s" << std::setw(11) << "contact_s" << std::setw(12) << "max_F_N" << std::setw(12)
      << "bend_Nm" << std::setw(6) << "n" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(6) << r.condition << std::setw(20) << r.task << std::right << std::fixed
        << std::setprecision(3) << std::setw(9) << r.success_rate << std::setw(11) << r.completion_time
        << std::setw(11) << r.contact_duration << std::setw(12) << r.max_force << std::setw(12)
        << r.max_bending_torque << std::setw(6) << r.episodes << '\n';
  }
  out << std::defaultfloat;
}

std::vector<metrics::MetricsSummary> group_summaries(const std::vector<metrics::EpisodeRow>& rows) {
  std::map<std::pair<std::string, std::string>, std::vector<metrics::EpisodeMetrics>> groups;
  for (const auto& r : rows) groups[{r.condition, r.task}].push_back(r.metrics);
  std::vector<metrics::MetricsSummary> out;
  for (const auto& [key, ms] : groups) out.push_back(metrics::summarize(key.first, key.second, ms));
  return out;
}

fs::path episode_log_path(const fs::path& dir, const metrics::EpisodeRow& row) {
  std::ostringstream name;
  name << std::setw(4) << std::setfill('0') << row.episode << '_' << row.condition << ".ndjson.gz";
  return dir / name.str();
}

// ---- serve ----

int cmd_serve(const RunConfig& c, std::ostream& out) {
  transport::ServiceConfig sc;
  sc.session = c.session();
  sc.bind_address = c.serve.bind;
  sc.tcp_port = c.serve.tcp_port;
  sc.ws_port = c.serve.ws_port;
  sc.clock = c.serve.clock;
  sc.ui_dir = c.serve.ui_dir;
  sc.log_path = c.serve.log.empty() ? output_dir(c) / ("serve_" + std::to_string(c.seed) + ".ndjson.gz")
                                    : fs::path(c.serve.log);
  if (sc.log_path.has_parent_path()) fs::create_directories(sc.log_path.parent_path());
  sc.config = to_json(c);
  sc.handle_signals = true;

  transport::Service service(sc);
  service.start();
  out << "hapcompass serve: task " << sim::to_string(c.experiment.session.task.kind) << ", condition "
      << haptics::to_string(sc.session.condition) << ", seed " << c.seed << ", clock "
      << transport::to_string(sc.clock) << '\n'
      << "  tcp  " << sc.bind_address << ':' << service.tcp_port() << '\n'
      << "  ws   ws://" << sc.bind_address << ':' << service.ws_port() << "/\n";
  if (!sc.ui_dir.empty()) out << "  ui   http://" << sc.bind_address << ':' << service.ws_port() << "/ui/\n";
  out << std::flush;

  const transport::ServiceResult r = service.wait();
  const auto ev = r.log.terminal_event();
  out << "episode ended: " << (ev ? metrics::to_string(ev->kind) : "incomplete") << " after " << r.stats.ticks
      << " ticks (decode errors " << r.stats.decode_errors << ", seq gaps " << r.stats.seq_gaps << ", rejected poses "
      << r.stats.rejected_poses << ")\n";
  if (r.log_path) out << "log: " << r.log_path->string() << '\n';
  return kExitOk;
}

// ---- experiment ----

int cmd_experiment(const RunConfig& c, bool keep_logs, std::ostream& out) {
  const fs::path dir = output_dir(c);
  const fs::path log_dir = dir / "logs";
  if (keep_logs) fs::create_directories(log_dir);
  const json header = to_json(c);
  const auto result = experiment::run_experiment(
      c.experiment, [&](const metrics::EpisodeRow& row, const metrics::EpisodeLog& log) {
        if (keep_logs) transport::write_episode_log(episode_log_path(log_dir, row), log, header);
      });

  const std::string prov = provenance(c);
  auto episodes = open_out(dir / "episodes.csv");
  metrics::write_episode_csv(episodes, result.episodes, prov);
  auto summary = open_out(dir / "summary.csv");
  metrics::write_summary_csv(summary, result.summary, prov);

  print_summary(out, result.summary);
  out << "wrote " << (dir / "episodes.csv").string() << " and " << (dir / "summary.csv").string() << '\n';
  if (keep_logs) out << "episode logs in " << log_dir.string() << '\n';
  return kExitOk;
}

// ---- replay ----

struct LogContext {
  double contact_threshold = 2.0;
  metrics::LeverConfig lever;
  std::optional<RunConfig> config;
};

LogContext context_of(const transport::LoadedLog& loaded) {
  LogContext ctx;
  if (loaded.config.is_object() && !loaded.config.empty()) {
    ctx.config = run_config_from_json(loaded.config);
    ctx.contact_threshold = ctx.config->experiment.contact_threshold;
    ctx.lever = metrics::LeverConfig::for_task(ctx.config->experiment.session.task);
  } else {
    ctx.lever = metrics::LeverConfig::for_task(sim::TaskConfig::preset(loaded.log.meta.task));
  }
  return ctx;
}

json metrics_json(const metrics::EpisodeMetrics& m) {
  return {{"success", m.success},
          {"completion_time_s", m.completion_time},
          {"contact_duration_s", m.contact_duration},
          {"max_force_n", m.max_force},
          {"max_bending_torque_nm", m.max_bending_torque}};
}

/// Re-simulates the logged actions from the embedded config; returns the
/// first differing frame index, or nullopt when the logs are identical.
std::optional<std::size_t> verify_log(const metrics::EpisodeLog& log, const RunConfig& cfg) {
  transport::SessionConfig sc = cfg.session();
  sc.seed = log.meta.seed;
  sc.condition = log.meta.condition;
  transport::Session session(sc);
  for (const auto& a : log.actions) {
    if (session.finished()) break;
    session.tick_action(a);
  }
  const auto ev = log.terminal_event();
  if (!session.finished() && ev && ev->kind == metrics::EpisodeEventKind::aborted) session.abort();
  const metrics::EpisodeLog& again = session.log();
  if (again == log) return std::nullopt;
  const std::size_t n = std::min(again.frames.size(), log.frames.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (again.frames[i] != log.frames[i] || (i < again.cues.size() && i < log.cues.size() && again.cues[i] != log.cues[i])) {
      return i;
    }
  }
  return n;
}

int cmd_replay(const std::string& path, bool verify, std::ostream& out) {
  const transport::LoadedLog loaded = transport::read_episode_log(path);
  loaded.log.validate();
  const LogContext ctx = context_of(loaded);
  const auto m = metrics::episode_metrics(loaded.log, ctx.contact_threshold, ctx.lever);
  const auto ev = loaded.log.terminal_event();
  json report = {{"log", path},
                 {"task", sim::to_string(loaded.log.meta.task)},
                 {"condition", haptics::to_string(loaded.log.meta.condition)},
                 {"seed", loaded.log.meta.seed},
                 {"frames", loaded.log.frames.size()},
                 {"event", ev ? std::string(metrics::to_string(ev->kind)) : std::string("incomplete")},
                 {"metrics", metrics_json(m)}};
  if (!verify) {
    out << report.dump(2) << '\n';
    return kExitOk;
  }
  if (!ctx.config) throw std::runtime_error("log carries no config header; cannot re-simulate");
  const auto diff = verify_log(loaded.log, *ctx.config);
  report["verified"] = !diff.has_value();
  if (diff) report["first_mismatch_frame"] = *diff;
  out << report.dump(2) << '\n';
  return diff ? kExitRuntime : kExitOk;
}

// ---- afc ----

int cmd_afc(const RunConfig& c, std::ostream& out) {
  const AfcConfig& a = c.afc;
  const auto trials = metrics::run_synthetic_afc(a.n_choices, a.repetitions, a.kappa, a.attenuation_y, c.seed);
  const metrics::AfcStats stats = metrics::afc_stats(trials);
  const fs::path dir = output_dir(c);
  const std::string prov = provenance(c);

  auto tcsv = open_out(dir / "afc_trials.csv");
  tcsv << "# config: " << prov << '\n' << "trial,true_choice,true_deg,response,response_deg,correct\n";
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const int truth = metrics::choice_index(trials[i].true_direction, a.n_choices);
    tcsv << i << ',' << truth << ',' << rad2deg(metrics::canonical_angle(truth, a.n_choices)) << ','
         << trials[i].response << ',' << rad2deg(metrics::canonical_angle(trials[i].response, a.n_choices)) << ','
         << (truth == trials[i].response ? 1 : 0) << '\n';
  }

  auto ccsv = open_out(dir / "afc_confusion.csv");
  ccsv << "# config: " << prov << '\n' << "true_deg";
  for (int k = 0; k < a.n_choices; ++k) ccsv << ",resp_" << rad2deg(metrics::canonical_angle(k, a.n_choices));
  ccsv << '\n';
  json per_direction = json::array();
  json directions = json::array();
  for (int t = 0; t < a.n_choices; ++t) {
    ccsv << rad2deg(metrics::canonical_angle(t, a.n_choices));
    long total = 0;
    for (long v : stats.confusion[static_cast<std::size_t>(t)]) {
      ccsv << ',' << v;
      total += v;
    }
    ccsv << '\n';
    const long hit = stats.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(t)];
    directions.push_back(rad2deg(metrics::canonical_angle(t, a.n_choices)));
    per_direction.push_back(total > 0 ? static_cast<double>(hit) / static_cast<double>(total) : 0.0);
  }

  json radar = {{"n_choices", a.n_choices},
                {"directions_deg", directions},
                {"accuracy_per_direction", per_direction},
                {"accuracy", stats.accuracy},
                {"mean_angular_error_deg", stats.mean_angular_error_deg},
                {"trials", stats.trials},
                {"config", to_json(c)}};
  auto rjson = open_out(dir / "afc_radar.json");
  rjson << radar.dump(2) << '\n';

  out << a.n_choices << "-AFC: accuracy " << std::fixed << std::setprecision(3) << stats.accuracy
      << ", mean angular error " << std::setprecision(1) << stats.mean_angular_error_deg << " deg over "
      << stats.trials << " trials\n"
      << std::defaultfloat << "wrote afc_trials.csv, afc_confusion.csv and afc_radar.json in " << dir.string() << '\n';
  return kExitOk;
}

// ---- train / eval ----

fs::path policy_path(const RunConfig& c, const std::string& given) {
  return given.empty() ? fs::path(c.output_dir) / "policy.hcp" : fs::path(given);
}

int cmd_train(const RunConfig& c, const std::vector<std::string>& from_logs, bool keep_demos,
              const std::string& policy_out, std::ostream& out) {
  const LearningConfig& l = c.learning;
  const fs::path dir = output_dir(c);
  std::vector<metrics::EpisodeLog> logs;
  haptics::PipelineConfig pipeline = learning::pre_aligned_key_session(0).pipeline;
  if (from_logs.empty()) {
    logs = learning::collect_demos(l.demo_mode, l.demos, derive_seed(c.seed, kDemoStream), l.expert);
  } else {
    for (const auto& p : from_logs) {
      const auto loaded = transport::read_episode_log(p);
      loaded.log.validate();
      if (loaded.config.is_object() && !loaded.config.empty()) {
        pipeline = run_config_from_json(loaded.config).experiment.session.pipeline;
      }
      logs.push_back(loaded.log);
    }
  }
  if (keep_demos && from_logs.empty()) {
    const fs::path demo_dir = dir / "demos";
    fs::create_directories(demo_dir);
    const json header = to_json(c);
    for (std::size_t i = 0; i < logs.size(); ++i) {
      std::ostringstream name;
      name << "demo_" << std::setw(3) << std::setfill('0') << i << ".ndjson.gz";
      transport::write_episode_log(demo_dir / name.str(), logs[i], header);
    }
  }

  std::size_t succeeded = 0;
  for (const auto& log : logs) {
    const auto ev = log.terminal_event();
    if (ev && ev->kind == metrics::EpisodeEventKind::success) ++succeeded;
  }
  const learning::Dataset data = learning::dataset_from_logs(logs, pipeline, l.train.shape.horizon);
  learning::TrainResult r = learning::train_bc(data, l.train);
  r.policy.provenance = to_json(c);

  const fs::path ppath = policy_path(c, policy_out);
  if (ppath.has_parent_path()) fs::create_directories(ppath.parent_path());
  learning::save_policy(ppath, r.policy);
  auto loss = open_out(dir / "loss.csv");
  loss << "# config: " << provenance(c) << '\n' << "epoch,loss\n";
  for (std::size_t i = 0; i < r.loss_curve.size(); ++i) loss << i << ',' << r.loss_curve[i] << '\n';

  out << "demos: " << logs.size() << " (" << succeeded << " successful), transitions: " << data.transitions.size()
      << '\n'
      << "loss: " << r.loss_curve.front() << " -> " << r.loss_curve.back() << " after " << l.train.epochs
      << " epochs\n"
      << "policy: " << ppath.string() << '\n';
  return kExitOk;
}

int cmd_eval(const RunConfig& c, const std::string& path, std::ostream& out) {
  const learning::Policy policy = learning::load_policy(path);
  const learning::PolicyShape& want = c.learning.train.shape;
  if (!(policy.shape == want)) {
    throw ShapeError("policy " + path + " has hidden " + std::to_string(policy.shape.hidden) + ", horizon " +
                     std::to_string(policy.shape.horizon) + ", replan " + std::to_string(policy.shape.replan) +
                     " but the config expects hidden " + std::to_string(want.hidden) + ", horizon " +
                     std::to_string(want.horizon) + ", replan " + std::to_string(want.replan));
  }
  const std::uint64_t base = derive_seed(c.seed, kEvalStream);
  const auto ms = learning::rollout(policy, c.learning.eval_episodes, base, c.experiment.contact_threshold);

  const std::string task(sim::to_string(sim::TaskKind::key_insertion));
  const std::string cond(haptics::to_string(learning::pre_aligned_key_session(0).condition));
  std::vector<metrics::EpisodeRow> rows;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    rows.push_back({i, derive_seed(base, i), cond, task, ms[i]});
  }
  const auto summary = metrics::summarize(cond, task, ms);
  const fs::path dir = output_dir(c);
  const std::string prov = provenance(c);
  auto ecsv = open_out(dir / "eval_episodes.csv");
  metrics::write_episode_csv(ecsv, rows, prov);
  auto scsv = open_out(dir / "eval_summary.csv");
  metrics::write_summary_csv(scsv, std::vector{summary}, prov);

  out << "success " << summary.successes << '/' << summary.episodes << ", mean max force " << std::fixed
      << std::setprecision(2) << summary.max_force << " N, mean completion " << summary.completion_time << " s\n"
      << std::defaultfloat << "wrote eval_episodes.csv and eval_summary.csv in " << dir.string() << '\n';
  return kExitOk;
}

// ---- export-csv ----

void write_frames_csv(const fs::path& path, const metrics::EpisodeLog& log, const std::string& prov) {
  auto os = open_out(path);
  os << "# config: " << prov << '\n'
     << "t,ee_x,ee_y,ee_z,fx,fy,fz,tx,ty,tz,tactile_x,tactile_y,tactile_z,cue_theta,cue_amplitude,"
        "action_x,action_y,action_z\n";
  for (std::size_t i = 0; i < log.frames.size(); ++i) {
    const auto& f = log.frames[i];
    os << f.t << ',' << f.ee_position.x << ',' << f.ee_position.y << ',' << f.ee_position.z << ','
       << f.wrench.force.x << ',' << f.wrench.force.y << ',' << f.wrench.force.z << ',' << f.wrench.torque.x << ','
       << f.wrench.torque.y << ',' << f.wrench.torque.z << ',' << f.tactile.x << ',' << f.tactile.y << ','
       << f.tactile.z << ',';
    if (i < log.cues.size()) {
      os << log.cues[i].theta << ',' << log.cues[i].amplitude;
    } else {
      os << ',';
    }
    os << ',';
    if (i < log.actions.size()) {
      os << log.actions[i].x << ',' << log.actions[i].y << ',' << log.actions[i].z;
    } else {
      os << ",,";
    }
    os << '\n';
  }
}

std::string log_stem(const fs::path& p) {
  std::string name = p.filename().string();
  for (const char* ext : {".gz", ".ndjson", ".jsonl", ".json"}) {
    const std::string e(ext);
    if (name.size() > e.size() && name.compare(name.size() - e.size(), e.size(), e) == 0) name.resize(name.size() - e.size());
  }
  return name;
}

int cmd_export(const RunConfig& c, const std::vector<std::string>& paths, bool frames, std::ostream& out) {
  const fs::path dir = output_dir(c);
  std::vector<metrics::EpisodeRow> rows;
  json sources = json::array();
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto loaded = transport::read_episode_log(paths[i]);
    loaded.log.validate();
    const LogContext ctx = context_of(loaded);
    rows.push_back({i, loaded.log.meta.seed, std::string(haptics::to_string(loaded.log.meta.condition)),
                    std::string(sim::to_string(loaded.log.meta.task)),
                    metrics::episode_metrics(loaded.log, ctx.contact_threshold, ctx.lever)});
    sources.push_back({{"log", paths[i]}, {"config", loaded.config}});
    if (frames) write_frames_csv(dir / (log_stem(paths[i]) + "_frames.csv"), loaded.log, loaded.config.dump());
  }
  const std::string prov = json{{"sources", sources}}.dump();
  const auto summary = group_summaries(rows);
  auto ecsv = open_out(dir / "episodes.csv");
  metrics::write_episode_csv(ecsv, rows, prov);
  auto scsv = open_out(dir / "summary.csv");
  metrics::write_summary_csv(scsv, summary, prov);
  print_summary(out, summary);
  out << "wrote episodes.csv and summary.csv" << (frames ? " and per-log frame tables" : "") << " in "
      << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Directional tactile feedback for teleoperated insertion: service, simulation and analysis"};
  app.name("hapcompass");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_file, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--set", g.sets, "Override one config key, e.g. --set pipeline.gain_k=0.03")->take_all();
  bind(&app, "--seed", "seed", "Run seed", g);
  bind(&app, "--task", "task.kind", "Task preset: key, usb or spaghetti", g, true);
  bind(&app, "--condition", "session.condition", "Feedback condition C1..C4", g, true);
  bind(&app, "--out", "output_dir", "Output directory", g, true);
  app.add_flag("--dry-run", g.dry_run, "Print the resolved config and exit without side effects");

  auto* serve = app.add_subcommand("serve", "Run the networked node graph for one episode");
  bind(serve, "--bind", "serve.bind", "Bind address", g, true);
  bind(serve, "--port", "serve.tcp_port", "TCP port (0 picks a free one)", g);
  bind(serve, "--ws-port", "serve.ws_port", "Web-socket and /ui port (0 picks a free one)", g);
  bind(serve, "--clock", "serve.clock", "realtime or stepped", g, true);
  bind(serve, "--ui-dir", "serve.ui_dir", "Static assets served under /ui", g, true);
  bind(serve, "--log", "serve.log", "Episode log path (.ndjson or .ndjson.gz)", g, true);

  auto* exp = app.add_subcommand("experiment", "Scripted-operator episodes per condition");
  bind(exp, "--episodes", "experiment.episodes", "Episodes per condition", g);
  bind(exp, "--block-size", "experiment.block_size", "Consecutive episodes per condition", g);
  std::vector<std::string> conditions;
  exp->add_option("--conditions", conditions, "Conditions to run, e.g. C1,C4")->delimiter(',');
  bool keep_logs = false;
  exp->add_flag("--logs", keep_logs, "Write every episode log under <out>/logs");

  auto* replay = app.add_subcommand("replay", "Metrics for a recorded episode log");
  std::string replay_path;
  replay->add_option("log", replay_path, "Episode log")->required()->check(CLI::ExistingFile);
  bool verify = false;
  replay->add_flag("--verify", verify, "Re-simulate from the embedded config and compare");

  auto* afc = app.add_subcommand("afc", "Synthetic forced-choice direction study");
  bind(afc, "--choices", "afc.n_choices", "4 or 8 directions", g);
  bind(afc, "--repetitions", "afc.repetitions", "Trials per direction", g);
  bind(afc, "--kappa", "afc.kappa", "Respondent concentration (inf: noiseless)", g);
  bind(afc, "--attenuation", "afc.attenuation_y", "Vertical stimulus attenuation in [0, 1]", g);

  auto* train = app.add_subcommand("train", "Behavior cloning from scripted or recorded demonstrations");
  bind(train, "--demos", "learning.demos", "Number of scripted demonstrations", g);
  bind(train, "--demo-mode", "learning.demo_mode", "reactive or nonreactive", g, true);
  bind(train, "--epochs", "learning.train.epochs", "Training epochs", g);
  bind(train, "--lr", "learning.train.learning_rate", "Learning rate", g);
  bind(train, "--hidden", "learning.policy.hidden", "Hidden width", g);
  bind(train, "--horizon", "learning.policy.horizon", "Chunk length", g);
  bind(train, "--replan", "learning.policy.replan", "Steps executed per chunk", g);
  std::vector<std::string> from_logs;
  train->add_option("--from-logs", from_logs, "Train on these episode logs instead of scripted demos")
      ->check(CLI::ExistingFile);
  bool keep_demos = false;
  train->add_flag("--save-demos", keep_demos, "Write the scripted demonstrations under <out>/demos");
  std::string policy_out;
  train->add_option("--policy", policy_out, "Policy file (default <out>/policy.hcp)");

  auto* eval = app.add_subcommand("eval", "Roll out a trained policy");
  std::string eval_policy;
  eval->add_option("policy", eval_policy, "Policy file")->required()->check(CLI::ExistingFile);
  bind(eval, "--episodes", "learning.eval_episodes", "Evaluation episodes", g);
  bind(eval, "--hidden", "learning.policy.hidden", "Expected hidden width", g);
  bind(eval, "--horizon", "learning.policy.horizon", "Expected chunk length", g);
  bind(eval, "--replan", "learning.policy.replan", "Expected steps per chunk", g);

  auto* exp_csv = app.add_subcommand("export-csv", "Metrics tables (and optional per-tick tables) from logs");
  std::vector<std::string> export_paths;
  exp_csv->add_option("logs", export_paths, "Episode logs")->required()->check(CLI::ExistingFile);
  bool frames = false;
  exp_csv->add_flag("--frames", frames, "Also write <stem>_frames.csv per log");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (!conditions.empty()) {
      json list = json::array();
      for (const auto& c : conditions) list.push_back(c);
      g.flags.push_back({"experiment.conditions", list.dump(), false});
    }
    const RunConfig cfg = resolve(g);
    if (g.dry_run) {
      out << to_json(cfg).dump(2) << '\n';
      return kExitOk;
    }
    if (serve->parsed()) return cmd_serve(cfg, out);
    if (exp->parsed()) return cmd_experiment(cfg, keep_logs, out);
    if (replay->parsed()) return cmd_replay(replay_path, verify, out);
    if (afc->parsed()) return cmd_afc(cfg, out);
    if (train->parsed()) return cmd_train(cfg, from_logs, keep_demos, policy_out, out);
    if (eval->parsed()) return cmd_eval(cfg, eval_policy, out);
    if (exp_csv->parsed()) return cmd_export(cfg, export_paths, frames, out);
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ShapeError& e) {
    err << "shape error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace hapcompass::app
