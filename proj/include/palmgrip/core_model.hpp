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

// Shared domain types for the gripper stack.
//
// Units are fixed across the whole library and never converted at the
// public surface: degrees, millimetres, grams, seconds. Radians only appear
// inside implementation files.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace palmgrip {

inline constexpr int kFingerCount = 3;
/// Hard ceiling on any finger bend; pneu-net fingers can curl past 180°.
inline constexpr double kMaxBendDeg = 200.0;
inline constexpr double kGravity = 9.81;  // m/s^2

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  double width() const { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

enum class ShapeClass { ovoid, cylinder, annulus, sphere, cloth };
enum class FingerType { moulded_oval, printed };

std::string_view to_string(ShapeClass s);
std::string_view to_string(FingerType f);
ShapeClass parse_shape_class(std::string_view s);
FingerType parse_finger_type(std::string_view s);

inline constexpr std::array<FingerType, 2> kFingerTypes = {FingerType::moulded_oval,
                                                          FingerType::printed};

struct ObjectSpec {
  std::string name;
  double mass = 0.0;                  // g
  ShapeClass shape_class = ShapeClass::sphere;
  double characteristic_width = 0.0;  // mm, largest horizontal extent at rest
  double height = 0.0;                // mm
  bool cloth_like = false;
  double com_height_frac = 0.5;

  friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

/// Every violated ObjectSpec invariant, one message per field.
std::vector<std::string> object_issues(const ObjectSpec& obj);
/// Throws ValidationError when `object_issues` is non-empty.
const ObjectSpec& validate_object(const ObjectSpec& obj);

struct GripperConfig {
  int n_fingers = 3;
  double splay_angle = 25.0;           // deg from the palm axis
  double finger_length_moulded = 85.0; // mm
  double finger_length_printed = 75.0; // mm
  double palm_radius = 20.0;           // mm
  double finger_mount_radius = 35.0;   // mm
  Interval servo_range{-150.0, 150.0}; // deg
  double max_palm_speed = 700.0;       // deg/s
  double vacuum_hold_force = 0.5;      // N
  double mass_capacity = 80.0;         // g

  // Simulation knobs. All assumed values, none of them measured.
  double squeeze_margin = 10.0;         // mm
  double cup_effective_radius = 12.0;   // mm
  double friction_coeff = 0.8;
  double com_eccentricity = 0.0;        // mm, default for centred objects
  double off_center_eccentricity = 8.0; // mm, object landed off centre
  double palm_accel = 4000.0;           // deg/s^2
  double valve_latency = 0.03;          // s
  double regulator_lag = 0.08;          // s
  double flip_duration = 1.0;           // s

  double finger_length(FingerType type) const {
    return type == FingerType::printed ? finger_length_printed : finger_length_moulded;
  }

  friend bool operator==(const GripperConfig&, const GripperConfig&) = default;
};

/// Every violated GripperConfig invariant; each message names its field.
std::vector<std::string> config_issues(const GripperConfig& cfg);
/// Returns `cfg` unchanged, or throws ValidationError listing all issues.
const GripperConfig& validate_config(const GripperConfig& cfg);

enum class Facing { down, up };
enum class HoldMode { none, in_fingers, on_palm };

std::string_view to_string(Facing f);
std::string_view to_string(HoldMode m);
Facing parse_facing(std::string_view s);
HoldMode parse_hold_mode(std::string_view s);

struct HeldObject {
  ObjectSpec object;
  HoldMode hold_mode = HoldMode::in_fingers;
  double object_yaw = 0.0;  // deg
  // Set by the world model: cloth sitting in the finger gaps or an object
  // resting with an edge on a finger. Rotation is blocked while set.
  bool rotation_obstructed = false;
  double com_eccentricity = 0.0;  // mm from the palm axis

  friend bool operator==(const HeldObject&, const HeldObject&) = default;
};

/// Live actuator and object state. Every mutator validates first and leaves
/// the state untouched on failure, so an instance can never hold a
/// configuration that breaks its invariants.
class GripperState {
 public:
  GripperState() : GripperState(Interval{-150.0, 150.0}) {}
  explicit GripperState(Interval servo_range);

  const Interval& servo_range() const { return servo_range_; }
  double palm_angle() const { return palm_angle_; }
  double palm_velocity() const { return palm_velocity_; }
  double finger_command() const { return finger_command_; }
  const std::array<double, kFingerCount>& finger_bends() const { return finger_bends_; }
  bool vacuum_on() const { return vacuum_on_; }
  double flip_angle() const { return flip_angle_; }
  Facing facing() const { return flip_angle_ > 90.0 ? Facing::up : Facing::down; }
  const std::optional<HeldObject>& held() const { return held_; }
  HoldMode hold_mode() const { return held_ ? held_->hold_mode : HoldMode::none; }

  void set_palm(double angle, double velocity);
  void set_fingers(double command, const std::array<double, kFingerCount>& bends);
  void set_vacuum(bool on) { vacuum_on_ = on; }
  void set_flip_angle(double deg);
  void set_held(std::optional<HeldObject> held);
  void set_object_yaw(double yaw);

  friend bool operator==(const GripperState&, const GripperState&) = default;

 private:
  Interval servo_range_;
  double palm_angle_ = 0.0;
  double palm_velocity_ = 0.0;
  double finger_command_ = 0.0;
  std::array<double, kFingerCount> finger_bends_{};
  bool vacuum_on_ = false;
  double flip_angle_ = 0.0;
  std::optional<HeldObject> held_;
};

enum class SequenceStage {
  idle,
  approach,
  grasp,
  lift,
  flip_up,
  drop_to_palm,
  rotate_palm,
  regrasp,
  flip_down,
  place,
  done,
  fault,
};

std::string_view to_string(SequenceStage s);
SequenceStage parse_stage(std::string_view s);

/// APPROACH..PLACE, the stages that produce an outcome record.
std::span<const SequenceStage> pipeline_stages();
/// Position of `s` in IDLE..DONE; fault has no order and throws.
int stage_order(SequenceStage s);
/// The stage after `s` in pipeline order (DONE is absorbing).
SequenceStage next_stage(SequenceStage s);

enum class FailureKind {
  pushed_off_center,
  sagged_drop,
  lost_grip_deform,
  twisted_out,
  tipped_on_drop,
  bounced_off,
  draped_on_fingers,
  fell_between_fingers,
  blocked_rotation,
  converge_regrasp_fail,
  displaced_on_regrasp,
  infeasible_grasp,
  slipped_on_palm,
};

std::string_view to_string(FailureKind k);
FailureKind parse_failure_kind(std::string_view s);

enum class StageStatus { ok, failed, skipped };
std::string_view to_string(StageStatus s);
StageStatus parse_stage_status(std::string_view s);

struct StageRecord {
  SequenceStage stage = SequenceStage::approach;
  StageStatus status = StageStatus::ok;
  // For failed stages the cause. For ok stages an optional non-fatal note
  // (object pushed then re-centred, displaced on re-grasp).
  std::optional<FailureKind> failure_detail;

  friend bool operator==(const StageRecord&, const StageRecord&) = default;
};

struct TrialResult {
  ObjectSpec object;
  FingerType finger_type = FingerType::printed;
  std::vector<StageRecord> stage_outcomes;
  bool overall_success = false;
  std::uint64_t seed = 0;

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

/// Checks the ordering and success invariants of a finished trial.
std::vector<std::string> trial_issues(const TrialResult& t);

}  // namespace palmgrip
