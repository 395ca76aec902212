// Copyright 2026 The palmgrip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// palmgrip command-line tool.
//
//   palmgrip run      experiment suite, table/json/csv report
//   palmgrip golden   write or check the committed deterministic matrix
//   palmgrip serve    teleop WebSocket service
//   palmgrip calibrate / derive-slip   calibration and slip-model helpers

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "palmgrip/experiment.hpp"
#include "palmgrip/json_io.hpp"
#include "palmgrip/palm_rotor.hpp"
#include "palmgrip/sim_world.hpp"
#include "palmgrip/teleop_core.hpp"

#ifdef PALMGRIP_WITH_SERVER
#include "palmgrip/server.hpp"
#endif

namespace pg = palmgrip;

namespace {

constexpr int kToolError = 2;

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw pg::Error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw pg::Error("cannot write " + p.string());
  out << text;
}

std::vector<pg::FingerType> finger_selection(const std::string& s) {
  if (s == "both") return {pg::kFingerTypes.begin(), pg::kFingerTypes.end()};
  return {pg::parse_finger_type(s)};
}

struct RunArgs {
  std::string fingers = "both";
  std::string objects = "builtin";
  int reps = pg::kDefaultRepetitions;
  std::string mode = "det";
  std::uint64_t seed = 0;
  std::string format = "table";
  std::string out;
  int jobs = 1;
  bool no_restart = false;
  bool retry = false;
};

int cmd_run(const RunArgs& a) {
  const pg::World world = pg::World::load_default();
  pg::SuiteConfig cfg;
  cfg.mode = pg::parse_run_mode(a.mode);
  cfg.seed = a.seed;
  cfg.repetitions = a.reps;
  cfg.fingers = finger_selection(a.fingers);
  if (a.objects != "builtin") cfg.objects = pg::load_objects(a.objects);
  cfg.jobs = a.jobs;
  cfg.restart_on_failure = !a.no_restart;
  cfg.retry_before_advance = a.retry;
  const std::string text =
      pg::render_report(pg::run_suite(world, cfg), pg::parse_report_format(a.format));
  if (a.out.empty()) std::cout << text;
  else write_text(a.out, text);
  return 0;
}

const char* const kGoldenFiles[][2] = {{"deterministic_matrix.json", "json"},
                                       {"deterministic_matrix.csv", "csv"},
                                       {"deterministic_matrix.txt", "table"}};

int cmd_golden(const std::string& dir, bool check) {
  const pg::World world = pg::World::load_default();
  const pg::ExperimentReport report = pg::run_suite(world, pg::SuiteConfig{});
  int mismatches = 0;
  for (const auto& [name, fmt_name] : kGoldenFiles) {
    const std::string text = pg::render_report(report, pg::parse_report_format(fmt_name));
    const std::filesystem::path path = std::filesystem::path(dir) / name;
    if (check) {
      const bool same = std::filesystem::exists(path) && read_text(path) == text;
      std::cout << (same ? "same     " : "DIFFERENT") << "  " << path.string() << "\n";
      mismatches += same ? 0 : 1;
    } else {
      std::filesystem::create_directories(dir);
      write_text(path, text);
      std::cout << "wrote " << path.string() << "\n";
    }
  }
  return mismatches == 0 ? 0 : 1;
}

int cmd_calibrate(const std::string& fingers) {
  const pg::World world = pg::World::load_default();
  for (pg::FingerType f : finger_selection(fingers)) {
    std::cout << pg::export_calibration(world.fingers(f)) << "\n";
  }
  return 0;
}

int cmd_derive_slip(double margin) {
  const pg::World world = pg::World::load_default();
  const auto& cfg = world.config();
  const auto objects = pg::builtin_objects();
  const double force = pg::required_hold_force(objects, cfg, cfg.palm_accel, margin);
  std::cout << fmt::format(
      "minimum vacuum hold force for the builtin objects at {:g} deg/s^2 with {:g}% margin: "
      "{:.4f} N (configured {:g} N)\n",
      cfg.palm_accel, margin * 100.0, force, cfg.vacuum_hold_force);
  for (const auto& obj : objects) {
    const double v = pg::max_noslip_speed(obj, world.slip_model(), true, cfg.palm_accel,
                                          cfg.max_palm_speed);
    std::cout << fmt::format("  {:<22} {:>3g} g  max no-slip speed {:g} deg/s\n", obj.name,
                             obj.mass, v);
  }
  return 0;
}

struct ServeArgs {
  std::string config;
  std::string bind;
  double rate = 0.0;
  std::string trace;
  double time_scale = 0.0;
  std::string fingers;
};

int cmd_serve(const ServeArgs& a) {
#ifdef PALMGRIP_WITH_SERVER
  // Precedence: config file, then environment, then flags.
  std::string bind = "127.0.0.1:8765";
  pg::TeleopConfig cfg;
  if (!a.config.empty()) {
    const pg::json j = pg::read_json_file(a.config);
    pg::require_known_keys(j, {"bind", "rate_hz", "queue_capacity", "time_scale", "finger_type",
                               "stochastic", "seed", "trace"},
                           "serve config");
    bind = j.value("bind", bind);
    cfg.rate_hz = j.value("rate_hz", cfg.rate_hz);
    cfg.queue_capacity = j.value("queue_capacity", cfg.queue_capacity);
    cfg.time_scale = j.value("time_scale", cfg.time_scale);
    if (j.contains("finger_type")) cfg.finger_type = pg::parse_finger_type(j["finger_type"].get<std::string>());
    cfg.stochastic = j.value("stochastic", cfg.stochastic);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("trace")) cfg.trace_path = j["trace"].get<std::string>();
  }
  if (const char* env = std::getenv("PALMGRIP_BIND"); env && *env) bind = env;
  if (const char* env = std::getenv("PALMGRIP_RATE_HZ"); env && *env) {
    try {
      cfg.rate_hz = std::stod(env);
    } catch (const std::exception&) {
      throw pg::ParseError(fmt::format("PALMGRIP_RATE_HZ '{}' is not a number", env));
    }
  }
  if (!a.bind.empty()) bind = a.bind;
  if (a.rate > 0.0) cfg.rate_hz = a.rate;
  if (a.time_scale > 0.0) cfg.time_scale = a.time_scale;
  if (!a.trace.empty()) cfg.trace_path = a.trace;
  if (!a.fingers.empty()) cfg.finger_type = pg::parse_finger_type(a.fingers);

  pg::TeleopCore core(pg::World::load_default(), cfg);
  pg::TeleopServer server(core, pg::parse_bind(bind));
  core.start();
  std::cerr << fmt::format("palmgrip serving ws://{}:{}/ws at {:g} Hz\n",
                           pg::parse_bind(bind).host, server.port(), cfg.rate_hz);
  static pg::TeleopServer* running = &server;
  std::signal(SIGINT, [](int) { running->stop(); });
  std::signal(SIGTERM, [](int) { running->stop(); });
  server.run();
  core.stop();
  return 0;
#else
  (void)a;
  throw pg::Error("this build has no server support");
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"palmgrip: soft gripper with a rotating suction palm, simulated"};
  app.require_subcommand(1);
  std::string data_dir;
  app.add_option("--data-dir", data_dir, "Directory with config, curves, objects and rules");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run the object x finger-set experiment suite");
  run_cmd->add_option("--fingers", run.fingers, "moulded | printed | both")
      ->check(CLI::IsMember({"moulded", "moulded_oval", "printed", "both"}));
  run_cmd->add_option("--objects", run.objects, "Object file or 'builtin'");
  run_cmd->add_option("--reps", run.reps, "Trials per object and finger set")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--mode", run.mode, "det | stoch")
      ->check(CLI::IsMember({"det", "deterministic", "stoch", "stochastic"}));
  run_cmd->add_option("--seed", run.seed, "Suite seed for stochastic mode");
  run_cmd->add_option("--format", run.format, "table | json | csv")
      ->check(CLI::IsMember({"table", "json", "csv"}));
  run_cmd->add_option("--out", run.out, "Write the report here instead of stdout");
  run_cmd->add_option("--jobs", run.jobs, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--no-restart", run.no_restart, "Stop a trial at its first failed stage");
  run_cmd->add_flag("--retry", run.retry, "Retry a failed stage once before moving on");

  std::string golden_dir = "golden";
  bool golden_check = false;
  auto* golden_cmd = app.add_subcommand("golden", "Regenerate or check the deterministic matrix");
  golden_cmd->add_option("--dir", golden_dir, "Golden directory");
  golden_cmd->add_flag("--check", golden_check, "Compare instead of writing");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Teleop WebSocket service");
  serve_cmd->add_option("--config", serve.config, "JSON service config");
  serve_cmd->add_option("--bind", serve.bind, "host:port (env PALMGRIP_BIND)");
  serve_cmd->add_option("--rate", serve.rate, "Telemetry Hz, 1-120 (env PALMGRIP_RATE_HZ)");
  serve_cmd->add_option("--trace", serve.trace, "Session trace, newline-delimited JSON");
  serve_cmd->add_option("--time-scale", serve.time_scale, "Simulated seconds per wall second");
  serve_cmd->add_option("--fingers", serve.fingers, "Initial finger set");

  std::string cal_fingers = "both";
  auto* cal_cmd = app.add_subcommand("calibrate", "Print the per-finger voltage ranges");
  cal_cmd->add_option("--fingers", cal_fingers, "moulded | printed | both");

  double margin = 0.25;
  auto* slip_cmd = app.add_subcommand("derive-slip", "Minimum vacuum hold force");
  slip_cmd->add_option("--margin", margin, "Torque margin as a fraction");

  CLI11_PARSE(app, argc, argv);
  try {
    if (!data_dir.empty()) pg::set_data_dir(data_dir);
    if (*run_cmd) return cmd_run(run);
    if (*golden_cmd) return cmd_golden(golden_dir, golden_check);
    if (*serve_cmd) return cmd_serve(serve);
    if (*cal_cmd) return cmd_calibrate(cal_fingers);
    if (*slip_cmd) return cmd_derive_slip(margin);
  } catch (const pg::ValidationError& e) {
    std::cerr << "palmgrip: " << e.what() << "\n";
    for (const auto& issue : e.issues()) std::cerr << "  - " << issue << "\n";
    return kToolError;
  } catch (const std::exception& e) {
    std::cerr << "palmgrip: " << e.what() << "\n";
    return kToolError;
  }
  return kToolError;
}
