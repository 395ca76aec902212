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

#include "palmgrip/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "palmgrip/error.hpp"

namespace palmgrip {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table,
             std::string_view what) {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  throw ParseError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

template <typename E, std::size_t N>
std::string_view name_of(E e, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [value, name] : table) {
    if (value == e) return name;
  }
  return "?";
}

constexpr std::array<std::pair<ShapeClass, std::string_view>, 5> kShapeNames{{
    {ShapeClass::ovoid, "ovoid"},
    {ShapeClass::cylinder, "cylinder"},
    {ShapeClass::annulus, "annulus"},
    {ShapeClass::sphere, "sphere"},
    {ShapeClass::cloth, "cloth"},
}};

constexpr std::array<std::pair<FingerType, std::string_view>, 2> kFingerNames{{
    {FingerType::moulded_oval, "moulded_oval"},
    {FingerType::printed, "printed"},
}};

constexpr std::array<std::pair<Facing, std::string_view>, 2> kFacingNames{{
    {Facing::down, "down"},
    {Facing::up, "up"},
}};

constexpr std::array<std::pair<HoldMode, std::string_view>, 3> kHoldNames{{
    {HoldMode::none, "none"},
    {HoldMode::in_fingers, "in_fingers"},
    {HoldMode::on_palm, "on_palm"},
}};

constexpr std::array<std::pair<SequenceStage, std::string_view>, 12> kStageNames{{
    {SequenceStage::idle, "IDLE"},
    {SequenceStage::approach, "APPROACH"},
    {SequenceStage::grasp, "GRASP"},
    {SequenceStage::lift, "LIFT"},
    {SequenceStage::flip_up, "FLIP_UP"},
    {SequenceStage::drop_to_palm, "DROP_TO_PALM"},
    {SequenceStage::rotate_palm, "ROTATE_PALM"},
    {SequenceStage::regrasp, "REGRASP"},
    {SequenceStage::flip_down, "FLIP_DOWN"},
    {SequenceStage::place, "PLACE"},
    {SequenceStage::done, "DONE"},
    {SequenceStage::fault, "FAULT"},
}};

constexpr std::array<std::pair<FailureKind, std::string_view>, 13> kFailureNames{{
    {FailureKind::pushed_off_center, "pushed_off_center"},
    {FailureKind::sagged_drop, "sagged_drop"},
    {FailureKind::lost_grip_deform, "lost_grip_deform"},
    {FailureKind::twisted_out, "twisted_out"},
    {FailureKind::tipped_on_drop, "tipped_on_drop"},
    {FailureKind::bounced_off, "bounced_off"},
    {FailureKind::draped_on_fingers, "draped_on_fingers"},
    {FailureKind::fell_between_fingers, "fell_between_fingers"},
    {FailureKind::blocked_rotation, "blocked_rotation"},
    {FailureKind::converge_regrasp_fail, "converge_regrasp_fail"},
    {FailureKind::displaced_on_regrasp, "displaced_on_regrasp"},
    {FailureKind::infeasible_grasp, "infeasible_grasp"},
    {FailureKind::slipped_on_palm, "slipped_on_palm"},
}};

constexpr std::array<std::pair<StageStatus, std::string_view>, 3> kStatusNames{{
    {StageStatus::ok, "ok"},
    {StageStatus::failed, "failed"},
    {StageStatus::skipped, "skipped"},
}};

constexpr std::array<SequenceStage, 9> kPipeline{
    SequenceStage::approach,     SequenceStage::grasp,       SequenceStage::lift,
    SequenceStage::flip_up,      SequenceStage::drop_to_palm, SequenceStage::rotate_palm,
    SequenceStage::regrasp,      SequenceStage::flip_down,   SequenceStage::place,
};

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> issues)
    : Error([&] {
        std::string msg = "validation failed:";
        for (const auto& i : issues) msg += "\n  " + i;
        return msg;
      }()),
      issues_(std::move(issues)) {}

std::string_view to_string(ShapeClass s) { return name_of(s, kShapeNames); }
std::string_view to_string(FingerType f) { return name_of(f, kFingerNames); }
std::string_view to_string(Facing f) { return name_of(f, kFacingNames); }
std::string_view to_string(HoldMode m) { return name_of(m, kHoldNames); }
std::string_view to_string(SequenceStage s) { return name_of(s, kStageNames); }
std::string_view to_string(FailureKind k) { return name_of(k, kFailureNames); }
std::string_view to_string(StageStatus s) { return name_of(s, kStatusNames); }

ShapeClass parse_shape_class(std::string_view s) { return parse_enum(s, kShapeNames, "shape_class"); }
FingerType parse_finger_type(std::string_view s) {
  // CLI shorthand "moulded" is accepted alongside the canonical name.
  if (s == "moulded") return FingerType::moulded_oval;
  return parse_enum(s, kFingerNames, "finger_type");
}
Facing parse_facing(std::string_view s) { return parse_enum(s, kFacingNames, "facing"); }
HoldMode parse_hold_mode(std::string_view s) { return parse_enum(s, kHoldNames, "hold_mode"); }
SequenceStage parse_stage(std::string_view s) { return parse_enum(s, kStageNames, "stage"); }
FailureKind parse_failure_kind(std::string_view s) {
  return parse_enum(s, kFailureNames, "failure kind");
}
StageStatus parse_stage_status(std::string_view s) {
  return parse_enum(s, kStatusNames, "stage status");
}

std::span<const SequenceStage> pipeline_stages() { return kPipeline; }

int stage_order(SequenceStage s) {
  if (s == SequenceStage::fault) throw StateError("FAULT has no pipeline position");
  return static_cast<int>(s);
}

SequenceStage next_stage(SequenceStage s) {
  if (s == SequenceStage::done) return s;
  return static_cast<SequenceStage>(stage_order(s) + 1);
}

std::vector<std::string> object_issues(const ObjectSpec& obj) {
  std::vector<std::string> out;
  if (obj.name.empty()) out.emplace_back("name must not be empty");
  if (!(obj.mass > 0.0)) out.push_back("mass must be > 0 g (got " + fmt_num(obj.mass) + ")");
  if (!(obj.characteristic_width > 0.0)) {
    out.push_back("characteristic_width must be > 0 mm (got " +
                  fmt_num(obj.characteristic_width) + ")");
  }
  if (!(obj.height > 0.0)) out.push_back("height must be > 0 mm (got " + fmt_num(obj.height) + ")");
  if (obj.cloth_like != (obj.shape_class == ShapeClass::cloth)) {
    out.emplace_back("cloth_like must be true exactly when shape_class is cloth");
  }
  if (!(obj.com_height_frac >= 0.0 && obj.com_height_frac <= 1.0)) {
    out.push_back("com_height_frac must lie in [0,1] (got " + fmt_num(obj.com_height_frac) + ")");
  }
  return out;
}

const ObjectSpec& validate_object(const ObjectSpec& obj) {
  if (auto issues = object_issues(obj); !issues.empty()) throw ValidationError(std::move(issues));
  return obj;
}

std::vector<std::string> config_issues(const GripperConfig& cfg) {
  std::vector<std::string> out;
  auto positive = [&](double v, const char* field) {
    if (!(v > 0.0)) out.push_back(std::string(field) + " must be > 0 (got " + fmt_num(v) + ")");
  };
  if (cfg.n_fingers != kFingerCount) out.emplace_back("n_fingers must be 3");
  if (!(cfg.splay_angle > 0.0 && cfg.splay_angle < 90.0)) out.emplace_back("splay_angle out of range");
  positive(cfg.finger_length_moulded, "finger_length.moulded_oval");
  positive(cfg.finger_length_printed, "finger_length.printed");
  if (!(cfg.finger_length_printed < cfg.finger_length_moulded)) {
    out.emplace_back("finger_length.printed must be shorter than finger_length.moulded_oval");
  }
  positive(cfg.palm_radius, "palm_radius");
  positive(cfg.finger_mount_radius, "finger_mount_radius");
  if (!(cfg.servo_range.lo < cfg.servo_range.hi)) out.emplace_back("servo_range is empty");
  positive(cfg.max_palm_speed, "max_palm_speed");
  positive(cfg.vacuum_hold_force, "vacuum_hold_force");
  positive(cfg.mass_capacity, "mass_capacity");
  if (!(cfg.squeeze_margin >= 0.0)) out.emplace_back("squeeze_margin must be >= 0");
  positive(cfg.cup_effective_radius, "cup_effective_radius");
  positive(cfg.friction_coeff, "friction_coeff");
  if (!(cfg.com_eccentricity >= 0.0)) out.emplace_back("com_eccentricity must be >= 0");
  if (!(cfg.off_center_eccentricity >= 0.0)) out.emplace_back("off_center_eccentricity must be >= 0");
  positive(cfg.palm_accel, "palm_accel");
  if (!(cfg.valve_latency >= 0.0)) out.emplace_back("valve_latency must be >= 0");
  if (!(cfg.regulator_lag >= 0.0)) out.emplace_back("regulator_lag must be >= 0");
  positive(cfg.flip_duration, "flip_duration");
  return out;
}

const GripperConfig& validate_config(const GripperConfig& cfg) {
  if (auto issues = config_issues(cfg); !issues.empty()) throw ValidationError(std::move(issues));
  return cfg;
}

GripperState::GripperState(Interval servo_range) : servo_range_(servo_range) {
  if (!(servo_range.lo < servo_range.hi)) throw ValidationError({"servo_range is empty"});
  palm_angle_ = std::clamp(0.0, servo_range.lo, servo_range.hi);
}

void GripperState::set_palm(double angle, double velocity) {
  if (!servo_range_.contains(angle)) {
    throw RangeError("palm_angle " + fmt_num(angle) + " outside servo_range [" +
                     fmt_num(servo_range_.lo) + ", " + fmt_num(servo_range_.hi) + "]");
  }
  if (!std::isfinite(velocity)) throw RangeError("palm_velocity must be finite");
  palm_angle_ = angle;
  palm_velocity_ = velocity;
}

void GripperState::set_fingers(double command, const std::array<double, kFingerCount>& bends) {
  if (!(command >= 0.0 && command <= 1.0)) {
    throw DomainError("finger_command " + fmt_num(command) + " outside [0,1]");
  }
  for (double b : bends) {
    if (!(b >= 0.0 && b <= kMaxBendDeg)) {
      throw RangeError("finger bend " + fmt_num(b) + " outside [0, 200] deg");
    }
  }
  finger_command_ = command;
  finger_bends_ = bends;
}

void GripperState::set_flip_angle(double deg) {
  if (!(deg >= 0.0 && deg <= 180.0)) throw RangeError("flip_angle outside [0,180]");
  const Facing would_face = deg > 90.0 ? Facing::up : Facing::down;
  if (hold_mode() == HoldMode::on_palm && would_face != Facing::up) {
    throw StateError("cannot turn face down with an object resting on the palm");
  }
  flip_angle_ = deg;
}

void GripperState::set_held(std::optional<HeldObject> held) {
  if (held) {
    validate_object(held->object);
    if (held->hold_mode == HoldMode::none) {
      throw StateError("held object needs hold_mode in_fingers or on_palm");
    }
    if (held->hold_mode == HoldMode::on_palm && facing() != Facing::up) {
      throw StateError("object can only rest on the palm while the gripper faces up");
    }
    if (!std::isfinite(held->object_yaw)) throw RangeError("object_yaw must be finite");
  }
  held_ = std::move(held);
}

void GripperState::set_object_yaw(double yaw) {
  if (!held_) throw StateError("no object held");
  if (!std::isfinite(yaw)) throw RangeError("object_yaw must be finite");
  held_->object_yaw = yaw;
}

std::vector<std::string> trial_issues(const TrialResult& t) {
  std::vector<std::string> out;
  const auto pipeline = pipeline_stages();
  if (t.stage_outcomes.size() != pipeline.size()) {
    out.emplace_back("stage_outcomes must list every pipeline stage exactly once");
  } else {
    for (std::size_t i = 0; i < pipeline.size(); ++i) {
      if (t.stage_outcomes[i].stage != pipeline[i]) {
        out.push_back("stage_outcomes[" + std::to_string(i) + "] out of pipeline order");
      }
    }
  }
  const bool all_ok = std::all_of(t.stage_outcomes.begin(), t.stage_outcomes.end(),
                                  [](const StageRecord& r) { return r.status == StageStatus::ok; });
  if (t.overall_success != (all_ok && !t.stage_outcomes.empty())) {
    out.emplace_back("overall_success must equal 'every stage ok'");
  }
  bool seen_skip = false;
  for (const auto& r : t.stage_outcomes) {
    if (r.status == StageStatus::skipped) seen_skip = true;
    else if (seen_skip) out.emplace_back("a stage ran after a skipped stage");
    if (r.status == StageStatus::failed && !r.failure_detail) {
      out.push_back("failed stage " + std::string(to_string(r.stage)) + " has no failure_detail");
    }
  }
  return out;
}

}  // namespace palmgrip
