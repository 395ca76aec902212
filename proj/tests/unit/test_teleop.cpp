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

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "../support/recorder.hpp"
#include "palmgrip/teleop_core.hpp"

using namespace palmgrip;
using namespace std::chrono_literals;
using oracle::Recorder;

namespace {

const World& world() {
  static const World w = World::load(PALMGRIP_TEST_DATA_DIR);
  return w;
}

TeleopConfig fast() {
  TeleopConfig cfg;
  cfg.time_scale = 50.0;
  return cfg;
}

// Runs `c` and waits for its final answer.
Reply run(TeleopCore& core, Recorder& r, Command c) {
  core.submit(r.id(), c);
  const auto reply = r.wait_reply(c.id, ReplyStatus::completed);
  REQUIRE(reply.has_value());
  return *reply;
}

}  // namespace

TEST_CASE("first client operates, later ones observe") {
  TeleopCore core(world(), fast());
  core.start();
  Recorder a, b;
  a.attach(core);
  b.attach(core);
  CHECK(core.client_count() == 2);
  CHECK(*core.role(a.id()) == Role::operator_);
  CHECK(*core.role(b.id()) == Role::observer);
  CHECK(a.control().at(0)["role"] == "operator");
  CHECK(b.control().at(0)["role"] == "observer");
  CHECK(b.control().at(0)["rate_hz"] == 30.0);

  const Reply denied = run(core, b, {1, cmd::Vacuum{true}});
  CHECK(denied.status == ReplyStatus::rejected);
  CHECK(denied.reason == reason::not_operator);
  CHECK_FALSE(core.snapshot().state.vacuum_on());

  // Operator leaves: the observer takes over.
  core.disconnect(a.id());
  CHECK(*core.role(b.id()) == Role::operator_);
  CHECK(b.wait_until([](Recorder& r) {
    const auto& c = r.control_unlocked();
    return c.size() >= 2 && c.back()["type"] == "role" && c.back()["role"] == "operator";
  }));
  CHECK(run(core, b, {2, cmd::Vacuum{true}}).status == ReplyStatus::completed);
  CHECK(core.snapshot().state.vacuum_on());
}

TEST_CASE("release_operator hands over to the other client") {
  TeleopCore core(world(), fast());
  core.start();
  Recorder a, b;
  a.attach(core);
  b.attach(core);
  CHECK(run(core, a, {1, cmd::ReleaseOperator{}}).status == ReplyStatus::completed);
  CHECK(*core.role(a.id()) == Role::observer);
  CHECK(*core.role(b.id()) == Role::operator_);
  CHECK(run(core, a, {2, cmd::Vacuum{true}}).reason == reason::not_operator);
}

TEST_CASE("rejected commands leave the state bit-identical") {
  TeleopCore core(world(), fast());
  core.start();
  Recorder a;
  a.attach(core);
  run(core, a, {1, cmd::Flip{Facing::up}});
  run(core, a, {2, cmd::LoadObject{builtin_object("tape")}});
  run(core, a, {3, cmd::Vacuum{true}});
  const TelemetryFrame before = core.snapshot();
  const std::string before_text = json(before.state).dump();

  const std::vector<std::pair<Command, std::string_view>> bad = {
      {{10, cmd::RotatePalm{181, 600}}, reason::invalid},
      {{11, cmd::RotatePalm{90, 701}}, reason::invalid},
      {{12, cmd::SetFingers{1.2}}, reason::invalid},
      {{13, cmd::Flip{Facing::down}}, reason::invalid_state},           // object on the palm
      {{14, cmd::LoadObject{builtin_object("glove")}}, reason::invalid_state},  // already loaded
      {{15, cmd::RunSequence{SequencePlan{builtin_object("glove")}}}, reason::invalid_state},
      {{16, cmd::Cancel{}}, reason::nothing_in_flight},
      {{17, cmd::Resume{}}, reason::not_paused},
  };
  for (const auto& [c, why] : bad) {
    const Reply r = run(core, a, c);
    CAPTURE(c.id);
    CHECK(r.status == ReplyStatus::rejected);
    CHECK(r.reason == why);
    CHECK(core.snapshot().state == before.state);
    CHECK(json(core.snapshot().state).dump() == before_text);
  }
  // Undecodable text with an id is answered, without one the transport is told to close.
  CHECK(core.submit(a.id(), R"({"id":20,"type":"warp"})"));
  CHECK(a.wait_reply(20, ReplyStatus::completed)->reason == reason::unknown_command);
  CHECK_FALSE(core.submit(a.id(), "garbage"));
  CHECK(core.snapshot().state == before.state);
}

TEST_CASE("two-client flood is linearizable") {
  const auto rep = oracle::flood_check(world(), 150, 7);
  for (const auto& p : rep.problems) MESSAGE(p);
  CHECK(rep.problems.empty());
  CHECK(rep.applied > 50);
  CHECK(rep.state_rejects > 0);
  CHECK(rep.other_rejects > 0);
}

TEST_CASE("vacuum completes in the tick that applies it") {
  TeleopCore core(world(), fast());
  core.start();
  Recorder a;
  a.attach(core);
  const auto t0 = std::chrono::steady_clock::now();
  const Reply r = run(core, a, {1, cmd::Vacuum{true}});
  CHECK(std::chrono::steady_clock::now() - t0 < 100ms);
  CHECK(r.result["vacuum_on"] == true);
  // Accepted and completed are adjacent: no telemetry frame in between.
  const auto msgs = a.all();
  for (std::size_t i = 0; i + 1 < msgs.size(); ++i) {
    if (msgs[i]["type"] == "reply" && msgs[i]["status"] == "accepted") {
      CHECK(msgs[i + 1]["type"] == "reply");
      CHECK(msgs[i + 1]["status"] == "completed");
    }
  }
}

TEST_CASE("rotating a loaded ball") {
  TeleopCore core(world(), fast());
  core.start();
  Recorder a;
  a.attach(core);
  run(core, a, {1, cmd::RotatePalm{-90, 700}});
  run(core, a, {2, cmd::Flip{Facing::up}});
  CHECK(run(core, a, {3, cmd::LoadObject{builtin_object("tennis_ball")}}).result["hold_mode"] == "on_palm");
  run(core, a, {4, cmd::Vacuum{true}});
  const Reply r = run(core, a, {5, cmd::RotatePalm{90, 600}});
  CHECK(r.result["slipped"] == false);
  CHECK(r.result["object_yaw_change"].get<double>() == doctest::Approx(180));
  const GripperState s = core.snapshot().state;
  CHECK(s.palm_angle() == 90);
  CHECK(s.held()->object_yaw == doctest::Approx(180));
}

TEST_CASE("run_sequence streams stages and ends at DONE") {
  TeleopConfig cfg = fast();
  cfg.rate_hz = 120;
  TeleopCore core(world(), cfg);
  core.start();
  Recorder a;
  a.attach(core);
  SequencePlan plan;
  plan.object = builtin_object("tennis_ball");
  plan.finger_type = FingerType::printed;
  const Reply r = run(core, a, {1, cmd::RunSequence{plan}});
  REQUIRE(r.status == ReplyStatus::completed);
  CHECK(r.result["overall_success"] == true);
  CHECK(core.snapshot().stage == SequenceStage::done);
  // Give one more frame a chance to go out after completion.
  a.wait_until([](Recorder& rec) {
    const auto& f = rec.frames_unlocked();
    return !f.empty() && f.back().stage == SequenceStage::done;
  });
  const auto frames = a.frames();
  int last = -1;
  int distinct = 0;
  for (const auto& f : frames) {
    if (f.stage == SequenceStage::idle) continue;
    const int order = stage_order(f.stage);
    CHECK(order >= last);
    distinct += order > last;
    last = order;
  }
  CHECK(distinct >= 3);
  CHECK(frames.back().stage == SequenceStage::done);
}

TEST_CASE("run_sequence failure surfaces the rule and its observation") {
  TeleopCore core(world(), fast());
  core.start();
  Recorder a;
  a.attach(core);
  SequencePlan plan;
  plan.object = builtin_object("tape");
  plan.finger_type = FingerType::moulded_oval;
  plan.restart_on_failure = false;
  const Reply r = run(core, a, {1, cmd::RunSequence{plan}});
  CHECK(r.result["overall_success"] == false);
  const auto ev = core.snapshot().last_event;
  REQUIRE(ev.has_value());
  CHECK(ev->stage == SequenceStage::drop_to_palm);
  CHECK(ev->status == StageStatus::failed);
  CHECK(ev->rule_id == "drop-annulus-moulded-wide");
  CHECK_FALSE(ev->paper_quote.empty());
  CHECK(core.snapshot().stage == SequenceStage::fault);
}

TEST_CASE("cancel stops an in-flight rotation") {
  TeleopConfig cfg;
  cfg.time_scale = 0.5;  // a 300 deg move takes about 1.1 s of wall time
  TeleopCore core(world(), cfg);
  core.start();
  Recorder a;
  a.attach(core);
  core.submit(a.id(), Command{1, cmd::RotatePalm{-150, 700}});
  REQUIRE(a.wait_reply(1, ReplyStatus::accepted).has_value());
  std::this_thread::sleep_for(300ms);
  core.submit(a.id(), Command{2, cmd::Cancel{}});
  const auto rot = a.wait_reply(1, ReplyStatus::completed);
  const auto can = a.wait_reply(2, ReplyStatus::completed);
  REQUIRE(rot.has_value());
  REQUIRE(can.has_value());
  CHECK(rot->result["cancelled"] == true);
  CHECK(can->status == ReplyStatus::completed);
  const double angle = core.snapshot().state.palm_angle();
  CHECK(angle < 0.0);
  CHECK(angle > -150.0);
  CHECK(core.snapshot().state.palm_velocity() == 0.0);
}

TEST_CASE("pause freezes playback and resume finishes it") {
  TeleopConfig cfg;
  cfg.time_scale = 0.5;
  TeleopCore core(world(), cfg);
  core.start();
  Recorder a;
  a.attach(core);
  core.submit(a.id(), Command{1, cmd::RotatePalm{150, 700}});
  REQUIRE(a.wait_reply(1, ReplyStatus::accepted).has_value());
  std::this_thread::sleep_for(200ms);
  CHECK(run(core, a, {2, cmd::Pause{}}).status == ReplyStatus::completed);
  CHECK(run(core, a, {3, cmd::Pause{}}).reason == reason::already_paused);
  const double frozen = core.snapshot().state.palm_angle();
  std::this_thread::sleep_for(200ms);
  CHECK(core.snapshot().state.palm_angle() == frozen);
  CHECK(core.snapshot().paused);
  CHECK(run(core, a, {4, cmd::Resume{}}).status == ReplyStatus::completed);
  REQUIRE(a.wait_reply(1, ReplyStatus::completed).has_value());
  CHECK(core.snapshot().state.palm_angle() == 150);
}

TEST_CASE("a full queue answers busy") {
  TeleopConfig cfg;
  cfg.time_scale = 0.2;
  cfg.queue_capacity = 2;
  TeleopCore core(world(), cfg);
  core.start();
  Recorder a;
  a.attach(core);
  core.submit(a.id(), Command{1, cmd::RotatePalm{150, 700}});
  REQUIRE(a.wait_reply(1, ReplyStatus::accepted).has_value());
  for (int i = 2; i <= 5; ++i) core.submit(a.id(), Command{i, cmd::Vacuum{i % 2 == 0}});
  CHECK(a.wait_reply(4, ReplyStatus::completed)->reason == reason::busy);
  CHECK(a.wait_reply(5, ReplyStatus::completed)->reason == reason::busy);
}

TEST_CASE("telemetry is monotonic at the configured rate") {
  TeleopConfig cfg;
  cfg.rate_hz = 30;
  TeleopCore core(world(), cfg);
  core.start();
  Recorder a;
  a.attach(core);
  REQUIRE(a.wait_until([](Recorder& r) { return r.frames_unlocked().size() >= 50; }, 5s));
  const auto frames = a.frames();
  for (std::size_t i = 1; i < frames.size(); ++i) CHECK(frames[i].timestamp_ms > frames[i - 1].timestamp_ms);
  const std::int64_t t0 = frames.front().timestamp_ms;
  int in_window = 0;
  for (const auto& f : frames) in_window += f.timestamp_ms < t0 + 1000;
  CHECK(in_window >= 29);
  CHECK(in_window <= 31);
}

TEST_CASE("session trace records commands, replies and events") {
  const auto path = std::filesystem::temp_directory_path() / "palmgrip_trace_test.ndjson";
  TeleopConfig cfg = fast();
  cfg.trace_path = path;
  {
    TeleopCore core(world(), cfg);
    core.start();
    Recorder a;
    a.attach(core);
    SequencePlan plan;
    plan.object = builtin_object("styrofoam_egg");
    plan.finger_type = FingerType::printed;
    run(core, a, {1, cmd::RunSequence{plan}});
    core.submit(a.id(), "nonsense");
    core.disconnect(a.id());
  }
  std::ifstream in(path);
  std::map<std::string, int> kinds;
  std::string line;
  while (std::getline(in, line)) kinds[json::parse(line).at("kind").get<std::string>()]++;
  std::filesystem::remove(path);
  CHECK(kinds["connect"] == 1);
  CHECK(kinds["command"] == 1);
  CHECK(kinds["reply"] == 2);
  CHECK(kinds["event"] == 9);
  CHECK(kinds["bad_message"] == 1);
  CHECK(kinds["disconnect"] == 1);
}

TEST_CASE("reset and config validation") {
  TeleopCore core(world(), fast());
  core.start();
  Recorder a;
  a.attach(core);
  run(core, a, {1, cmd::Flip{Facing::up}});
  run(core, a, {2, cmd::LoadObject{builtin_object("tape")}});
  run(core, a, {3, cmd::Reset{}});
  CHECK(core.snapshot().state == GripperState(world().config().servo_range));
  TeleopConfig bad;
  bad.rate_hz = 500;
  CHECK_THROWS_AS(TeleopCore(world(), bad), ValidationError);
}
