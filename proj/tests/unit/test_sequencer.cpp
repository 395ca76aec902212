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

#include <chrono>
#include <cmath>

#include "../support/oracles.hpp"
#include "palmgrip/sequencer.hpp"

using namespace palmgrip;

namespace {

const World& world() {
  static const World w = World::load(PALMGRIP_TEST_DATA_DIR);
  return w;
}

SequencePlan plan_for(std::string_view object, FingerType f) {
  SequencePlan p;
  p.object = builtin_object(object);
  p.finger_type = f;
  return p;
}

const StageRecord& record_at(const TrialResult& t, SequenceStage s) {
  for (const auto& r : t.stage_outcomes) {
    if (r.stage == s) return r;
  }
  throw std::logic_error("missing stage");
}

}  // namespace

TEST_CASE("ball with printed fingers completes every stage") {
  DeterministicChooser d;
  std::vector<TraceEvent> events;
  const TrialRun run = run_trial(world(), plan_for("tennis_ball", FingerType::printed), d, 0,
                                 [&](const TraceEvent& e) { events.push_back(e); });
  CHECK(run.result.overall_success);
  CHECK(run.final_stage == SequenceStage::done);
  CHECK(trial_issues(run.result).empty());
  REQUIRE(events.size() == 9);
  for (const auto& e : events) CHECK(e.record.status == StageStatus::ok);
  // Object turned half a revolution in the fingers before being placed.
  const auto& after_rotate = events[6].before;  // REGRASP starts from the rotated pose
  REQUIRE(after_rotate.held());
  CHECK(std::abs(after_rotate.held()->object_yaw - 180.0) <= kYawTolerance);
  CHECK(after_rotate.palm_angle() == doctest::Approx(150.0));
  CHECK(run.duration > 0.0);
  for (std::size_t i = 1; i < events.size(); ++i) CHECK(events[i].timestamp >= events[i - 1].timestamp);
}

TEST_CASE("glove: draped drop then blocked rotation") {
  const SequencePlan plan = plan_for("glove", FingerType::printed);
  DeterministicChooser d;
  const GripperState pre = precondition(world(), plan, SequenceStage::drop_to_palm);
  const StepResult drop = step(world(), pre, SequenceStage::drop_to_palm, plan, d, 0);
  CHECK(drop.next == SequenceStage::fault);
  CHECK(*drop.record.failure_detail == FailureKind::draped_on_fingers);
  CHECK(drop.state.vacuum_on());

  // Continuing from the draped state, the palm turns under the cloth.
  const StepResult rot = step(world(), drop.state, SequenceStage::rotate_palm, plan, d, 0);
  CHECK(rot.next == SequenceStage::fault);
  CHECK(*rot.record.failure_detail == FailureKind::blocked_rotation);
  CHECK(rot.state.held()->object_yaw == drop.state.held()->object_yaw);

  const TrialResult t = run_trial(world(), plan, d, 0).result;
  CHECK_FALSE(t.overall_success);
  CHECK(*record_at(t, SequenceStage::rotate_palm).failure_detail == FailureKind::blocked_rotation);
}

TEST_CASE("egg with moulded fingers fails at regrasp and the restart finishes the pipeline") {
  DeterministicChooser d;
  const TrialRun run = run_trial(world(), plan_for("styrofoam_egg", FingerType::moulded_oval), d, 0);
  const auto& rg = record_at(run.result, SequenceStage::regrasp);
  CHECK(rg.status == StageStatus::failed);
  CHECK(*rg.failure_detail == FailureKind::converge_regrasp_fail);
  CHECK(record_at(run.result, SequenceStage::flip_down).status == StageStatus::ok);
  CHECK(record_at(run.result, SequenceStage::place).status == StageStatus::ok);
  CHECK_FALSE(run.result.overall_success);
  CHECK(run.final_stage == SequenceStage::done);
  CHECK(trial_issues(run.result).empty());
}

TEST_CASE("without restart the remaining stages are skipped") {
  SequencePlan plan = plan_for("styrofoam_egg", FingerType::moulded_oval);
  plan.restart_on_failure = false;
  DeterministicChooser d;
  const TrialRun run = run_trial(world(), plan, d, 0);
  CHECK(run.final_stage == SequenceStage::fault);
  CHECK(record_at(run.result, SequenceStage::flip_down).status == StageStatus::skipped);
  CHECK(record_at(run.result, SequenceStage::place).status == StageStatus::skipped);
  CHECK(trial_issues(run.result).empty());
}

TEST_CASE("retry before advance re-runs the failed stage once") {
  SequencePlan plan = plan_for("cylindrical_container", FingerType::printed);
  plan.retry_before_advance = true;
  // Find a seed whose first grasp twists out.
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    SeededChooser c;
    std::vector<TraceEvent> events;
    run_trial(world(), plan, c, seed, [&](const TraceEvent& e) { events.push_back(e); });
    if (events[1].record.status != StageStatus::failed) continue;
    REQUIRE(events[2].stage == SequenceStage::grasp);
    CHECK(events[2].attempt == 1);
    CHECK(events[2].restarted);
    return;
  }
  FAIL("no seed produced a failed grasp");
}

TEST_CASE("identical seeds give identical trials") {
  for (const auto& obj : builtin_objects()) {
    for (FingerType f : kFingerTypes) {
      SequencePlan p;
      p.object = obj;
      p.finger_type = f;
      for (std::uint64_t seed : {1ULL, 99ULL, 123456789ULL}) {
        CHECK(run_trial(world(), p, seed) == run_trial(world(), p, seed));
      }
    }
  }
}

TEST_CASE("step guards") {
  const SequencePlan plan = plan_for("tennis_ball", FingerType::printed);
  DeterministicChooser d;
  const GripperState s0 = initial_state(world(), plan);
  CHECK_THROWS_AS(step(world(), s0, SequenceStage::fault, plan, d, 0), StateError);
  CHECK_THROWS_AS(step(world(), s0, SequenceStage::lift, plan, d, 0), StateError);
  CHECK_THROWS_AS(step(world(), s0, SequenceStage::drop_to_palm, plan, d, 0), StateError);
  const StepResult done = step(world(), s0, SequenceStage::done, plan, d, 0);
  CHECK(done.next == SequenceStage::done);
  CHECK(done.state == s0);
}

TEST_CASE("infeasible grasp is a stage failure, not an exception") {
  SequencePlan plan = plan_for("tennis_ball", FingerType::printed);
  plan.object.mass = 95;
  DeterministicChooser d;
  const StepResult r = step(world(), initial_state(world(), plan), SequenceStage::grasp, plan, d, 0);
  CHECK(r.next == SequenceStage::fault);
  CHECK(*r.record.failure_detail == FailureKind::infeasible_grasp);
}

TEST_CASE("rotate_in_hand") {
  const GripperConfig& cfg = world().config();
  GripperState s(cfg.servo_range);
  s.set_flip_angle(180);
  s.set_vacuum(true);
  s.set_palm(-30, 0);
  s.set_held(HeldObject{builtin_object("tennis_ball"), HoldMode::on_palm});
  const InHandResult r = rotate_in_hand(world(), 180, 600, s);
  CHECK_FALSE(r.blocked);
  CHECK(r.state.palm_angle() == 150);
  CHECK(std::abs(r.state.held()->object_yaw - 180) <= kYawTolerance);

  const InHandResult same = rotate_in_hand(world(), 0, 600, s);
  CHECK(same.rotation.duration == 0.0);
  CHECK(same.state == s);

  CHECK_THROWS_AS(rotate_in_hand(world(), 200, 600, s), RangeError);
  GripperState obstructed = s;
  HeldObject glove{builtin_object("glove"), HoldMode::on_palm, 0.0, true, 0.0};
  obstructed.set_held(glove);
  CHECK(rotate_in_hand(world(), 90, 600, obstructed).blocked);
  GripperState empty = s;
  empty.set_held(std::nullopt);
  CHECK_THROWS_AS(rotate_in_hand(world(), 90, 600, empty), StateError);
}

TEST_CASE("palm parking fits the rotation into the servo range") {
  const Interval range{-150, 150};
  CHECK(palm_park_angle(180, range) == -30);
  CHECK(palm_park_angle(-180, range) == 30);
  CHECK(palm_park_angle(90, range) == 0);
  CHECK(palm_park_angle(300, range) == -150);
  CHECK_THROWS_AS(palm_park_angle(301, range), RangeError);
}

TEST_CASE("plan validation and json") {
  const GripperConfig& cfg = world().config();
  SequencePlan p = plan_for("tape", FingerType::moulded_oval);
  CHECK(plan_issues(p, cfg).empty());
  p.rotation_speed = 701;
  p.target_yaw = 400;
  p.grasp_u = 1.5;
  CHECK(plan_issues(p, cfg).size() == 3);
  CHECK_THROWS_AS(validate_plan(p, cfg), ValidationError);

  SequencePlan q = plan_for("glove", FingerType::printed);
  q.grasp_u = 0.375;
  q.target_yaw = -90;
  q.restart_on_failure = false;
  q.retry_before_advance = true;
  CHECK(json(q).get<SequencePlan>() == q);
  json bad = q;
  bad["speed"] = 3;
  CHECK_THROWS_AS(bad.get<SequencePlan>(), ParseError);
}

TEST_CASE("exhaustive model check of the stage machine") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto stats = oracle::model_check(world());
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(stats.pairs == 10);
  CHECK(stats.paths > 40);
  for (const auto& v : stats.violations) MESSAGE(v);
  CHECK(stats.violations.empty());
  CHECK(seconds < 5.0);
}
