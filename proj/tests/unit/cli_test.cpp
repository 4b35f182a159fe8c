#include "hapcompass/app/cli.hpp"

#include <csignal>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include "hapcompass/app/run_config.hpp"
#include "hapcompass/core/errors.hpp"
#include "hapcompass/metrics/metrics.hpp"
#include "hapcompass/transport/log_io.hpp"
#include "hapcompass/transport/service.hpp"

namespace hapcompass::app {
namespace {

namespace fs = std::filesystem;
using namespace std::chrono_literals;

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hapcompass");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class Cli : public ::testing::Test {
 protected:
  fs::path dir = fs::temp_directory_path() / ("hapcompass_cli_" + std::to_string(::getpid()) + "_" +
                                              ::testing::UnitTest::GetInstance()->current_test_info()->name());
  void SetUp() override { fs::remove_all(dir); }
  void TearDown() override { fs::remove_all(dir); }
  std::string out(const std::string& sub = "") const { return (dir / sub).string(); }
};

TEST_F(Cli, DryRunPrintsResolvedConfigWithoutSideEffects) {
  const CliRun r = cli({"--out", out("o"), "--task", "usb", "--seed", "7", "--dry-run", "experiment", "--episodes", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json printed = json::parse(r.out);
  const RunConfig c = run_config_from_json(printed);
  EXPECT_EQ(c.experiment.session.task.kind, sim::TaskKind::usb_insertion);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.experiment.episodes, 3);
  EXPECT_FALSE(fs::exists(dir));
}

TEST_F(Cli, FlagsWinOverSetWhichWinsOverTheFile) {
  fs::create_directories(dir);
  std::ofstream(dir / "cfg.json") << R"({"seed": 3, "afc": {"kappa": 2.0, "repetitions": 4}})";
  const auto seed_of = [](const CliRun& r) { return json::parse(r.out)["seed"].get<std::uint64_t>(); };
  const std::string cfg = out("cfg.json");
  EXPECT_EQ(seed_of(cli({"--config", cfg, "--dry-run", "afc"})), 3u);
  EXPECT_EQ(seed_of(cli({"--config", cfg, "--set", "seed=4", "--dry-run", "afc"})), 4u);
  EXPECT_EQ(seed_of(cli({"--config", cfg, "--set", "seed=4", "--seed", "5", "--dry-run", "afc"})), 5u);
  const json doc = json::parse(cli({"--config", cfg, "--dry-run", "afc", "--kappa", "inf"}).out);
  EXPECT_EQ(doc["afc"]["kappa"], "inf");
  EXPECT_EQ(doc["afc"]["repetitions"], 4);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"dance"}).code, 2);
  EXPECT_EQ(cli({"--condition", "C9", "afc"}).code, 2);
  EXPECT_EQ(cli({"--set", "afc.bogus=1", "afc"}).code, 2);
  EXPECT_EQ(cli({"--config", out("missing.json"), "afc"}).code, 2);
  EXPECT_EQ(cli({"replay", out("missing.ndjson.gz")}).code, 2);
  fs::create_directories(dir);
  std::ofstream(dir / "junk.ndjson") << "{not json\n";
  const CliRun r = cli({"replay", out("junk.ndjson")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST_F(Cli, ExperimentWritesDocumentedTables) {
  const CliRun r = cli({"--out", out(), "--seed", "2", "experiment", "--episodes", "2", "--conditions", "C1,C4", "--logs"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto episodes = lines_of(dir / "episodes.csv");
  ASSERT_EQ(episodes.size(), 2u + 4u);
  EXPECT_EQ(episodes[0].rfind("# config: {", 0), 0u);
  EXPECT_EQ(episodes[1], metrics::kEpisodeColumns);
  const RunConfig embedded = run_config_from_json(json::parse(episodes[0].substr(10)));
  EXPECT_EQ(embedded.seed, 2u);
  const auto summary = lines_of(dir / "summary.csv");
  ASSERT_EQ(summary.size(), 2u + 2u);
  EXPECT_EQ(summary[1], metrics::kSummaryColumns);
  EXPECT_EQ(summary[2].rfind("C1,key_insertion,", 0), 0u);
  EXPECT_EQ(summary[3].rfind("C4,key_insertion,", 0), 0u);
  EXPECT_EQ(std::distance(fs::directory_iterator(dir / "logs"), fs::directory_iterator{}), 4);

  // Same config and seed: same tables.
  const std::string first = slurp(dir / "episodes.csv");
  ASSERT_EQ(cli({"--out", out(), "--seed", "2", "experiment", "--episodes", "2", "--conditions", "C1,C4"}).code, 0);
  EXPECT_EQ(slurp(dir / "episodes.csv"), first);
}

TEST_F(Cli, SingleEpisodeBatch) {
  ASSERT_EQ(cli({"--out", out(), "experiment", "--episodes", "1", "--conditions", "C4"}).code, 0);
  EXPECT_EQ(lines_of(dir / "episodes.csv").size(), 3u);
  EXPECT_EQ(lines_of(dir / "summary.csv").size(), 3u);
}

TEST_F(Cli, DirectionalCueBeatsVisionOnlyOnKeyTask) {
  ASSERT_EQ(cli({"--out", out(), "--task", "key", "--seed", "1", "experiment", "--episodes", "20"}).code, 0);
  std::map<std::string, double> success;
  for (const auto& line : lines_of(dir / "summary.csv")) {
    if (line.rfind("C", 0) != 0) continue;
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    success[line.substr(0, a)] = std::stod(line.substr(b + 1));
  }
  ASSERT_EQ(success.size(), 4u);
  EXPECT_GT(success["C4"], success["C1"]);
}

TEST_F(Cli, ReplayVerifiesAndDetectsTampering) {
  ASSERT_EQ(cli({"--out", out(), "experiment", "--episodes", "1", "--conditions", "C2", "--logs"}).code, 0);
  const fs::path log = dir / "logs" / "0000_C2.ndjson.gz";
  const CliRun ok = cli({"replay", log.string(), "--verify"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  const json report = json::parse(ok.out);
  EXPECT_TRUE(report["verified"].get<bool>());
  EXPECT_EQ(report["condition"], "C2");

  auto loaded = transport::read_episode_log(log);
  loaded.log.actions[3].x += 1e-4;
  transport::write_episode_log(dir / "tampered.ndjson.gz", loaded.log, loaded.config);
  const CliRun bad = cli({"replay", out("tampered.ndjson.gz"), "--verify"});
  EXPECT_EQ(bad.code, 3);
  EXPECT_EQ(json::parse(bad.out)["first_mismatch_frame"], 4);
}

TEST_F(Cli, AfcOutputs) {
  ASSERT_EQ(cli({"--out", out(), "--seed", "3", "afc"}).code, 0);
  const auto trials = lines_of(dir / "afc_trials.csv");
  ASSERT_EQ(trials.size(), 2u + 16u);
  std::map<std::string, int> per_direction;
  for (std::size_t i = 2; i < trials.size(); ++i) per_direction[trials[i].substr(trials[i].find(',') + 1, 1)]++;
  EXPECT_EQ(per_direction.size(), 8u);
  for (const auto& [d, n] : per_direction) EXPECT_EQ(n, 2) << d;
  EXPECT_EQ(lines_of(dir / "afc_confusion.csv").size(), 2u + 8u);

  ASSERT_EQ(cli({"--out", out(), "afc", "--kappa", "inf"}).code, 0);
  std::ifstream radar(dir / "afc_radar.json");
  EXPECT_EQ(json::parse(radar)["accuracy"], 1.0);

  ASSERT_EQ(cli({"--out", out(), "afc", "--repetitions", "250"}).code, 0);
  std::ifstream calibrated(dir / "afc_radar.json");
  const double acc = json::parse(calibrated)["accuracy"].get<double>();
  EXPECT_GE(acc, 0.55);
  EXPECT_LE(acc, 0.80);
}

TEST_F(Cli, TrainThenEval) {
  const CliRun t = cli({"--out", out(), "train", "--demos", "10", "--save-demos"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(lines_of(dir / "loss.csv").size(), 2u + 501u);
  EXPECT_EQ(std::distance(fs::directory_iterator(dir / "demos"), fs::directory_iterator{}), 10);
  const learning::Policy p = learning::load_policy(dir / "policy.hcp");
  EXPECT_EQ(run_config_from_json(p.provenance).learning.demos, 10);

  const CliRun e = cli({"--out", out(), "eval", out("policy.hcp"), "--episodes", "10"});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto rows = lines_of(dir / "eval_episodes.csv");
  ASSERT_EQ(rows.size(), 12u);
  int successes = 0;
  for (std::size_t i = 2; i < rows.size(); ++i) successes += rows[i].find(",key_insertion,1,") != std::string::npos;
  EXPECT_GE(successes, 8);

  const CliRun mismatch = cli({"--out", out(), "eval", out("policy.hcp"), "--horizon", "12"});
  EXPECT_EQ(mismatch.code, 2);
  EXPECT_NE(mismatch.err.find("horizon 12"), std::string::npos) << mismatch.err;

  // A file whose header disagrees with its weights.
  std::string bytes = slurp(dir / "policy.hcp");
  const auto at = bytes.rfind("\"horizon\":10");  // the shape header, not the embedded config
  ASSERT_NE(at, std::string::npos);
  bytes.replace(at, 12, "\"horizon\":12");
  std::ofstream(dir / "patched.hcp", std::ios::binary) << bytes;
  const CliRun patched = cli({"--out", out(), "eval", out("patched.hcp"), "--horizon", "12"});
  EXPECT_EQ(patched.code, 2);
  EXPECT_NE(patched.err.find("decoder"), std::string::npos) << patched.err;

  // Training on recorded logs goes through the same path.
  const CliRun from_logs = cli({"--out", out("b"), "train", "--epochs", "5", "--from-logs",
                             (dir / "demos" / "demo_000.ndjson.gz").string()});
  EXPECT_EQ(from_logs.code, 0) << from_logs.err;
}

TEST_F(Cli, ExportCsv) {
  ASSERT_EQ(cli({"--out", out(), "experiment", "--episodes", "2", "--conditions", "C3", "--logs"}).code, 0);
  const CliRun r = cli({"--out", out("x"), "export-csv", (dir / "logs" / "0000_C3.ndjson.gz").string(),
                     (dir / "logs" / "0001_C3.ndjson.gz").string(), "--frames"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines_of(dir / "x" / "summary.csv").size(), 3u);
  const auto original = lines_of(dir / "episodes.csv");
  const auto exported = lines_of(dir / "x" / "episodes.csv");
  ASSERT_EQ(exported.size(), original.size());
  for (std::size_t i = 1; i < original.size(); ++i) EXPECT_EQ(exported[i], original[i]);
  const auto frames = lines_of(dir / "x" / "0000_C3_frames.csv");
  const auto log = transport::read_episode_log(dir / "logs" / "0000_C3.ndjson.gz").log;
  EXPECT_EQ(frames.size(), 2u + log.frames.size());
}

// ---- serve, as a child process ----

class Child {
 public:
  explicit Child(const std::vector<std::string>& args) {
    int fds[2];
    if (::pipe(fds) != 0) throw std::runtime_error("pipe");
    pid_ = ::fork();
    if (pid_ == 0) {
      ::dup2(fds[1], STDOUT_FILENO);
      ::close(fds[0]);
      ::close(fds[1]);
      std::vector<char*> argv;
      std::string bin = HAPCOMPASS_BIN;
      argv.push_back(bin.data());
      std::vector<std::string> copy = args;
      for (auto& a : copy) argv.push_back(a.data());
      argv.push_back(nullptr);
      ::execv(bin.c_str(), argv.data());
      ::_exit(127);
    }
    ::close(fds[1]);
    stream_ = ::fdopen(fds[0], "r");
  }
  ~Child() {
    if (pid_ > 0 && !reaped_) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
    if (stream_) ::fclose(stream_);
  }

  std::optional<std::string> line() {
    char buf[4096];
    if (!::fgets(buf, sizeof buf, stream_)) return std::nullopt;
    std::string s(buf);
    if (!s.empty() && s.back() == '\n') s.pop_back();
    output_ += s + "\n";
    return s;
  }

  /// Reads the banner and returns the tcp and ws ports it names.
  std::pair<std::uint16_t, std::uint16_t> ports() {
    std::uint16_t tcp = 0, ws = 0;
    const std::regex tcp_re(R"(^\s+tcp\s+\S+:(\d+)$)"), ws_re(R"(^\s+ws\s+ws://\S+:(\d+)/$)");
    while (tcp == 0 || ws == 0) {
      const auto l = line();
      if (!l) throw std::runtime_error("serve exited before its banner: " + output_);
      std::smatch m;
      if (std::regex_match(*l, m, tcp_re)) tcp = static_cast<std::uint16_t>(std::stoi(m[1]));
      if (std::regex_match(*l, m, ws_re)) ws = static_cast<std::uint16_t>(std::stoi(m[1]));
    }
    return {tcp, ws};
  }

  void signal(int sig) { ::kill(pid_, sig); }

  int wait() {
    while (line()) {
    }
    int status = 0;
    ::waitpid(pid_, &status, 0);
    reaped_ = true;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  const std::string& output() const { return output_; }

 private:
  pid_t pid_ = -1;
  bool reaped_ = false;
  FILE* stream_ = nullptr;
  std::string output_;
};

std::vector<transport::HandPoseMsg> scripted_poses(const RunConfig& cfg, int n) {
  const transport::Session probe(cfg.session());
  Position3 p = probe.sim_state().ee_position;
  const Position3 target{0.0012, -0.0003, -0.02};
  std::vector<transport::HandPoseMsg> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({p, 0.5});
    p += sim::clamp_step(target - p, 0.0015);
  }
  return out;
}

TEST_F(Cli, ServePrintsBannerAndIsReproducibleWithAScriptedClient) {
  std::vector<std::string> logs;
  for (int run = 0; run < 2; ++run) {
    const std::string log = out("serve.ndjson.gz");
    Child child({"--out", out(), "--task", "key", "--condition", "C4", "--seed", "7", "serve", "--port", "0",
                 "--ws-port", "0", "--clock", "stepped", "--log", log});
    const auto [tcp, ws] = child.ports();
    EXPECT_NE(tcp, 0);
    EXPECT_NE(ws, 0);
    const RunConfig cfg = run_config_from_json(json::parse(cli({"--seed", "7", "--dry-run", "serve"}).out));
    {
      transport::TcpClient client("127.0.0.1", tcp);
      for (const auto& p : scripted_poses(cfg, 40)) {
        client.send(transport::kinds::hand_pose, transport::to_payload(p), transport::steady_micros());
      }
    }
    EXPECT_EQ(child.wait(), 0);
    EXPECT_NE(child.output().find("log: " + log), std::string::npos) << child.output();
    logs.push_back(slurp(log));
  }
  ASSERT_FALSE(logs[0].empty());
  EXPECT_TRUE(logs[0] == logs[1]);
  const auto loaded = transport::read_episode_log(out("serve.ndjson.gz"));
  EXPECT_EQ(loaded.log.meta.condition, haptics::Condition::directional);
  EXPECT_EQ(loaded.log.meta.seed, 7u);
  EXPECT_EQ(loaded.log.actions.size(), 40u);
}

TEST_F(Cli, InterruptFlushesAnIncompleteLog) {
  const std::string log = out("interrupted.ndjson.gz");
  Child child({"--out", out(), "--seed", "7", "serve", "--port", "0", "--ws-port", "0", "--log", log});
  child.ports();
  std::this_thread::sleep_for(300ms);
  child.signal(SIGINT);
  EXPECT_EQ(child.wait(), 0);
  EXPECT_NE(child.output().find("episode ended: aborted"), std::string::npos) << child.output();
  const auto loaded = transport::read_episode_log(log);
  ASSERT_TRUE(loaded.log.terminal_event().has_value());
  EXPECT_EQ(loaded.log.terminal_event()->kind, metrics::EpisodeEventKind::aborted);
  EXPECT_GT(loaded.log.frames.size(), 1u);
  EXPECT_EQ(loaded.config["seed"], 7);
}

}  // namespace
}  // namespace hapcompass::app
