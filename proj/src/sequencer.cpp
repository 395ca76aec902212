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

#include "palmgrip/sequencer.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace palmgrip {

namespace {

// Bookkeeping durations for stages without a physical model, in seconds.
constexpr double kApproachTime = 0.5;
constexpr double kLiftTime = 0.5;
constexpr double kSettleTime = 0.25;  // object falling onto the palm
constexpr double kPlaceTime = 0.5;
constexpr double kFrameStep = 0.02;

double plan_grasp_u(const World& world, const SequencePlan& plan) {
  if (plan.grasp_u) return *plan.grasp_u;
  const auto report = world.feasibility(plan.object, plan.finger_type);
  return report.grasp_u.value_or(1.0);
}

void close_fingers(GripperState& s, const FingerSet& set, double u) {
  s.set_fingers(u, bend_angles(u, set.calibration, set.curves));
}

HeldObject held(const ObjectSpec& obj, HoldMode mode, double yaw, const GripperConfig& cfg) {
  return HeldObject{obj, mode, yaw, false, cfg.com_eccentricity};
}

void require(bool ok, SequenceStage stage, std::string_view what) {
  if (!ok) {
    throw StateError(fmt::format("{} cannot start: {}", to_string(stage), what));
  }
}

// Linear flip between two angles with frames, holding whatever is in the fingers.
void flip(GripperState& s, double to, double duration, bool with_frames,
          std::vector<Keyframe>& frames) {
  const double from = s.flip_angle();
  if (with_frames) {
    const int n = std::max(1, static_cast<int>(std::ceil(duration / kFrameStep)));
    for (int i = 1; i < n; ++i) {
      const double t = duration * i / n;
      GripperState f = s;
      f.set_flip_angle(from + (to - from) * i / n);
      frames.push_back({t, std::move(f)});
    }
  }
  s.set_flip_angle(to);
}

void ramp_fingers(GripperState& s, const FingerSet& set, double u, double duration,
                  bool with_frames, std::vector<Keyframe>& frames) {
  const double from = s.finger_command();
  if (with_frames) {
    const int n = std::max(1, static_cast<int>(std::ceil(duration / kFrameStep)));
    for (int i = 1; i < n; ++i) {
      GripperState f = s;
      close_fingers(f, set, from + (u - from) * i / n);
      frames.push_back({duration * i / n, std::move(f)});
    }
  }
  close_fingers(s, set, u);
}

StepResult fail(StepResult r, FailureKind kind) {
  r.next = SequenceStage::fault;
  r.record.status = StageStatus::failed;
  r.record.failure_detail = kind;
  return r;
}

}  // namespace

std::vector<std::string> plan_issues(const SequencePlan& plan, const GripperConfig& cfg) {
  std::vector<std::string> out;
  for (auto& issue : object_issues(plan.object)) out.push_back("object: " + issue);
  if (!std::isfinite(plan.target_yaw) ||
      std::abs(plan.target_yaw) > cfg.servo_range.width()) {
    out.push_back(fmt::format("target_yaw {} exceeds the servo travel of {} deg", plan.target_yaw,
                              cfg.servo_range.width()));
  }
  if (!(plan.rotation_speed > 0.0 && plan.rotation_speed <= cfg.max_palm_speed)) {
    out.push_back(fmt::format("rotation_speed {} outside (0, {}]", plan.rotation_speed,
                              cfg.max_palm_speed));
  }
  if (plan.grasp_u && !(*plan.grasp_u >= 0.0 && *plan.grasp_u <= 1.0)) {
    out.push_back(fmt::format("grasp_u {} outside [0, 1]", *plan.grasp_u));
  }
  return out;
}

const SequencePlan& validate_plan(const SequencePlan& plan, const GripperConfig& cfg) {
  if (auto issues = plan_issues(plan, cfg); !issues.empty()) {
    throw ValidationError(std::move(issues));
  }
  return plan;
}

void to_json(json& j, const SequencePlan& p) {
  j = json{{"object", p.object},
           {"finger_type", to_string(p.finger_type)},
           {"target_yaw", p.target_yaw},
           {"grasp_u", p.grasp_u ? json(*p.grasp_u) : json(nullptr)},
           {"rotation_speed", p.rotation_speed},
           {"restart_on_failure", p.restart_on_failure},
           {"retry_before_advance", p.retry_before_advance}};
}

void from_json(const json& j, SequencePlan& p) {
  require_known_keys(j, {"object", "finger_type", "target_yaw", "grasp_u", "rotation_speed",
                         "restart_on_failure", "retry_before_advance"},
                     "plan");
  SequencePlan out;
  out.object = j.at("object").get<ObjectSpec>();
  out.finger_type = parse_finger_type(j.at("finger_type").get<std::string>());
  out.target_yaw = j.value("target_yaw", out.target_yaw);
  if (j.contains("grasp_u") && !j.at("grasp_u").is_null()) {
    out.grasp_u = j.at("grasp_u").get<double>();
  }
  out.rotation_speed = j.value("rotation_speed", out.rotation_speed);
  out.restart_on_failure = j.value("restart_on_failure", out.restart_on_failure);
  out.retry_before_advance = j.value("retry_before_advance", out.retry_before_advance);
  p = std::move(out);
}

double palm_park_angle(double target_yaw, const Interval& range) {
  // Closest start to 0 such that start + target_yaw stays in range.
  const double lo = std::max(range.lo, range.lo - target_yaw);
  const double hi = std::min(range.hi, range.hi - target_yaw);
  if (lo > hi) {
    throw RangeError(fmt::format("a {} deg rotation does not fit the servo range", target_yaw));
  }
  return std::clamp(0.0, lo, hi);
}

GripperState initial_state(const World& world, const SequencePlan& plan) {
  GripperState s(world.config().servo_range);
  s.set_palm(palm_park_angle(plan.target_yaw, s.servo_range()), 0.0);
  return s;
}

GripperState precondition(const World& world, const SequencePlan& plan, SequenceStage stage) {
  const GripperConfig& cfg = world.config();
  const FingerSet& set = world.fingers(plan.finger_type);
  const double u = plan_grasp_u(world, plan);
  GripperState s = initial_state(world, plan);
  const double park = s.palm_angle();
  const double rotated = park + plan.target_yaw;

  switch (stage) {
    case SequenceStage::idle:
    case SequenceStage::approach:
    case SequenceStage::grasp:
      break;
    case SequenceStage::lift:
    case SequenceStage::flip_up:
      close_fingers(s, set, u);
      s.set_held(held(plan.object, HoldMode::in_fingers, 0.0, cfg));
      break;
    case SequenceStage::drop_to_palm:
      close_fingers(s, set, u);
      s.set_flip_angle(180.0);
      s.set_held(held(plan.object, HoldMode::in_fingers, 0.0, cfg));
      break;
    case SequenceStage::rotate_palm:
    case SequenceStage::regrasp: {
      s.set_flip_angle(180.0);
      s.set_vacuum(true);
      const bool after = stage == SequenceStage::regrasp;
      if (after) s.set_palm(rotated, 0.0);
      HeldObject h = held(plan.object, HoldMode::on_palm, after ? plan.target_yaw : 0.0, cfg);
      // Cloth on the palm always reaches into the finger gaps.
      h.rotation_obstructed = plan.object.cloth_like;
      s.set_held(h);
      break;
    }
    case SequenceStage::flip_down:
      s.set_palm(rotated, 0.0);
      s.set_flip_angle(180.0);
      close_fingers(s, set, u);
      s.set_held(held(plan.object, HoldMode::in_fingers, plan.target_yaw, cfg));
      break;
    case SequenceStage::place:
      s.set_palm(rotated, 0.0);
      close_fingers(s, set, u);
      s.set_held(held(plan.object, HoldMode::in_fingers, plan.target_yaw, cfg));
      break;
    case SequenceStage::done:
      s.set_palm(rotated, 0.0);
      break;
    case SequenceStage::fault:
      throw StateError("FAULT has no precondition");
  }
  return s;
}

InHandResult rotate_in_hand(const World& world, double target_yaw, double speed,
                            const GripperState& state) {
  if (state.hold_mode() != HoldMode::on_palm) throw StateError("no object on the palm");
  if (!std::isfinite(target_yaw)) throw RangeError("target_yaw must be finite");
  const double yaw0 = state.held()->object_yaw;
  const double palm_target = state.palm_angle() + (target_yaw - yaw0);
  if (!state.servo_range().contains(palm_target)) {
    throw RangeError(fmt::format("yaw {} needs palm angle {} outside the servo range", target_yaw,
                                 palm_target));
  }
  InHandResult out;
  out.rotation = rotate_to(RotationCommand{palm_target, speed, world.config().palm_accel}, state,
                           palm_load(state), world.slip_model(), world.config().max_palm_speed);
  out.state = state;
  out.state.set_palm(out.rotation.final_angle, 0.0);
  out.state.set_object_yaw(yaw0 + out.rotation.object_yaw_change);
  out.blocked = out.rotation.slipped ||
                std::abs(out.state.held()->object_yaw - target_yaw) > kYawTolerance;
  return out;
}

StepResult step(const World& world, const GripperState& state, SequenceStage stage,
                const SequencePlan& plan, OutcomeChooser& chooser, std::uint64_t seed,
                int attempt, bool with_frames) {
  const GripperConfig& cfg = world.config();
  const FingerSet& set = world.fingers(plan.finger_type);
  const DecisionKey key{seed, plan.object.name, plan.finger_type, stage, attempt};

  StepResult r;
  r.state = state;
  r.record.stage = stage;
  r.next = next_stage(stage);
  GripperState& s = r.state;

  switch (stage) {
    case SequenceStage::idle:
    case SequenceStage::done:
      return r;
    case SequenceStage::fault:
      throw StateError("step() cannot leave FAULT; restart from a stage precondition");

    case SequenceStage::approach:
      require(s.hold_mode() == HoldMode::none, stage, "gripper already holds an object");
      require(s.facing() == Facing::down, stage, "gripper must face down");
      r.duration = kApproachTime;
      return r;

    case SequenceStage::grasp: {
      require(s.hold_mode() == HoldMode::none, stage, "gripper already holds an object");
      require(s.facing() == Facing::down, stage, "gripper must face down");
      GraspResult g;
      try {
        g = world.grasp_attempt(plan.object, plan.finger_type, chooser, key);
      } catch (const FeasibilityError&) {
        return fail(std::move(r), FailureKind::infeasible_grasp);
      }
      const double u = plan.grasp_u.value_or(g.feasibility.grasp_u.value_or(1.0));
      r.duration = cfg.regulator_lag + 0.4;
      ramp_fingers(s, set, u, r.duration, with_frames, r.frames);
      if (g.failure) return fail(std::move(r), *g.failure);
      s.set_held(held(plan.object, HoldMode::in_fingers, 0.0, cfg));
      r.record.failure_detail = g.note;
      return r;
    }

    case SequenceStage::lift:
      require(s.hold_mode() == HoldMode::in_fingers, stage, "nothing in the fingers");
      require(s.facing() == Facing::down, stage, "gripper must face down");
      r.duration = kLiftTime;
      return r;

    case SequenceStage::flip_up:
    case SequenceStage::flip_down: {
      const bool up = stage == SequenceStage::flip_up;
      require(s.hold_mode() == HoldMode::in_fingers, stage, "nothing in the fingers");
      require(s.facing() == (up ? Facing::down : Facing::up), stage, "gripper already flipped");
      const HoldResult h = world.flip_hold_check(plan.object, plan.finger_type, stage, chooser, key);
      r.duration = cfg.flip_duration;
      if (h.failure) s.set_held(std::nullopt);  // lost on the way round
      flip(s, up ? 180.0 : 0.0, r.duration, with_frames, r.frames);
      if (h.failure) return fail(std::move(r), *h.failure);
      return r;
    }

    case SequenceStage::drop_to_palm: {
      const DropResult d = world.drop_onto_palm(s, plan.finger_type, chooser, key);
      const ObjectSpec obj = s.held()->object;
      r.duration = cfg.valve_latency + cfg.regulator_lag + kSettleTime;
      ramp_fingers(s, set, 0.0, cfg.regulator_lag, with_frames, r.frames);
      s.set_vacuum(true);
      if (d.on_palm) {
        HeldObject h{obj, HoldMode::on_palm, d.landing_yaw, d.rotation_obstructed,
                     d.com_eccentricity};
        s.set_held(h);
      } else if (d.outcome == DropOutcome::draped) {
        s.set_held(HeldObject{obj, HoldMode::in_fingers, d.landing_yaw, true, d.com_eccentricity});
      } else {
        s.set_held(std::nullopt);
      }
      if (d.failure) return fail(std::move(r), *d.failure);
      return r;
    }

    case SequenceStage::rotate_palm: {
      require(s.facing() == Facing::up, stage, "gripper must face up");
      s.set_vacuum(true);
      const bool draped = s.hold_mode() == HoldMode::in_fingers && s.held()->rotation_obstructed;
      require(s.hold_mode() == HoldMode::on_palm || draped, stage, "no object on the palm");
      const double yaw0 = s.held()->object_yaw;
      if (draped) {
        // The palm turns under cloth caught in the fingers; the object stays put.
        const double target = s.palm_angle() + (plan.target_yaw - yaw0);
        PalmLoad load{s.held()->object, true, s.held()->com_eccentricity};
        r.rotation = rotate_to(RotationCommand{target, plan.rotation_speed, cfg.palm_accel}, s, load,
                               world.slip_model(), cfg.max_palm_speed);
        s.set_palm(r.rotation->final_angle, 0.0);
      } else {
        InHandResult ih = rotate_in_hand(world, plan.target_yaw, plan.rotation_speed, s);
        r.rotation = ih.rotation;
        s = ih.state;
      }
      r.duration = r.rotation->duration;
      if (with_frames) {
        const auto stride = static_cast<std::size_t>(std::lround(kFrameStep / kPalmStep));
        for (std::size_t i = stride; i + 1 < r.rotation->samples.size(); i += stride) {
          const PalmSample& p = r.rotation->samples[i];
          GripperState f = state;
          f.set_vacuum(true);
          f.set_palm(p.palm_angle, p.palm_velocity);
          if (f.held()) f.set_object_yaw(p.object_yaw);
          r.frames.push_back({p.t, std::move(f)});
        }
      }
      const bool obstructed = draped || s.held()->rotation_obstructed;
      if (obstructed) return fail(std::move(r), FailureKind::blocked_rotation);
      if (r.rotation->slipped || std::abs(s.held()->object_yaw - plan.target_yaw) > kYawTolerance) {
        return fail(std::move(r), FailureKind::slipped_on_palm);
      }
      return r;
    }

    case SequenceStage::regrasp: {
      const RegraspResult g = world.regrasp(s, plan.finger_type, chooser, key);
      const ObjectSpec obj = s.held()->object;
      const double yaw = s.held()->object_yaw;
      r.duration = cfg.regulator_lag + 0.4 + cfg.valve_latency;
      ramp_fingers(s, set, plan_grasp_u(world, plan), cfg.regulator_lag + 0.4, with_frames,
                   r.frames);
      s.set_vacuum(false);
      if (g.kind == RegraspKind::converge_regrasp_fail) {
        return fail(std::move(r), FailureKind::converge_regrasp_fail);
      }
      s.set_held(held(obj, HoldMode::in_fingers, yaw + g.yaw_error, cfg));
      if (g.kind == RegraspKind::displaced_on_regrasp) {
        r.record.failure_detail = FailureKind::displaced_on_regrasp;
      }
      return r;
    }

    case SequenceStage::place:
      require(s.hold_mode() == HoldMode::in_fingers, stage, "nothing in the fingers");
      require(s.facing() == Facing::down, stage, "gripper must face down");
      r.duration = kPlaceTime;
      ramp_fingers(s, set, 0.0, r.duration, with_frames, r.frames);
      s.set_held(std::nullopt);
      s.set_vacuum(false);
      return r;
  }
  throw StateError("unknown stage");
}

json trace_event_json(const TraceEvent& e) {
  json j{{"stage", to_string(e.stage)},
         {"outcome", to_string(e.record.status)},
         {"failure_detail",
          e.record.failure_detail ? json(to_string(*e.record.failure_detail)) : json(nullptr)},
         {"restarted", e.restarted},
         {"attempt", e.attempt},
         {"state", e.state},
         {"timestamp", e.timestamp}};
  return j;
}

TrialRun run_trial(const World& world, const SequencePlan& plan, OutcomeChooser& chooser,
                   std::uint64_t seed, const TraceSink& sink, bool with_frames) {
  validate_plan(plan, world.config());
  TrialRun run;
  run.result.object = plan.object;
  run.result.finger_type = plan.finger_type;
  run.result.seed = seed;

  GripperState state = initial_state(world, plan);
  bool restarted = false;
  bool halted = false;
  const auto emit = [&](SequenceStage stage, const StepResult& r, const GripperState& before,
                        int attempt, bool from_pre) {
    run.duration += r.duration;
    if (!sink) return;
    TraceEvent e{stage, r.record, from_pre, attempt, before, r.state, run.duration, {}};
    if (with_frames) e.frames = r.frames;
    sink(e);
  };

  for (SequenceStage stage : pipeline_stages()) {
    if (halted) {
      run.result.stage_outcomes.push_back({stage, StageStatus::skipped, std::nullopt});
      continue;
    }
    StepResult r = step(world, state, stage, plan, chooser, seed, 0, with_frames);
    emit(stage, r, state, 0, restarted);
    if (r.next == SequenceStage::fault && plan.retry_before_advance) {
      GripperState pre = precondition(world, plan, stage);
      r = step(world, pre, stage, plan, chooser, seed, 1, with_frames);
      emit(stage, r, pre, 1, true);
    }
    run.result.stage_outcomes.push_back(r.record);
    if (r.next == SequenceStage::fault) {
      if (plan.restart_on_failure) {
        state = precondition(world, plan, next_stage(stage));
        restarted = true;
      } else {
        state = r.state;
        halted = true;
      }
    } else {
      state = r.state;
      restarted = false;
    }
  }
  run.final_state = state;
  run.final_stage = halted ? SequenceStage::fault : SequenceStage::done;
  run.result.overall_success =
      std::all_of(run.result.stage_outcomes.begin(), run.result.stage_outcomes.end(),
                  [](const StageRecord& rec) { return rec.status == StageStatus::ok; });
  return run;
}

TrialResult run_trial(const World& world, const SequencePlan& plan, std::uint64_t seed) {
  SeededChooser chooser;
  return run_trial(world, plan, chooser, seed).result;
}

std::size_t EnumeratingChooser::pick(std::size_t count) {
  if (depth_ < path_.size()) {
    if (path_[depth_].count != count) throw StateError("enumeration path is not replayable");
  } else {
    path_.push_back({0, count});
  }
  return path_[depth_++].index;
}

std::size_t EnumeratingChooser::choose(const FailureRule& rule, const DecisionKey&) {
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < rule.outcomes.size(); ++i) {
    if (rule.outcomes[i].probability > 0.0) live.push_back(i);
  }
  const std::size_t i = live.at(pick(live.size()));
  probability_ *= rule.outcomes[i].probability;
  return i;
}

double EnumeratingChooser::uniform(const DecisionKey&, std::string_view) {
  const std::size_t i = pick(kEnumeratedUniforms.size());
  probability_ /= static_cast<double>(kEnumeratedUniforms.size());
  return kEnumeratedUniforms[i];
}

bool EnumeratingChooser::next_path() {
  if (!started_) {
    started_ = true;
  } else {
    path_.resize(depth_);
    while (!path_.empty() && path_.back().index + 1 >= path_.back().count) path_.pop_back();
    if (path_.empty()) return false;
    ++path_.back().index;
  }
  depth_ = 0;
  probability_ = 1.0;
  return true;
}

}  // namespace palmgrip
