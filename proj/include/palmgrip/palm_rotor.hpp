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

// Servo-driven palm with an integrated suction cup.
//
// Palm moves follow a trapezoidal speed profile (triangular when the move is
// too short to reach peak speed) and are stepped at 1 kHz. An object resting
// on the palm follows it while the torque needed to accelerate it,
//   tau_req = I * |alpha| + m * g * e,      I = m * (w/2)^2 / 2,
// stays within what the cup and friction can supply,
//   tau_avail = hold_torque (vacuum on only) + mu * m * g * r_cup.
// Beyond that the object slips and its yaw lags the palm.

#pragma once

#include <optional>
#include <vector>

#include "palmgrip/core_model.hpp"

namespace palmgrip {

inline constexpr double kPalmStep = 0.001;  // s
inline constexpr double kDefaultPalmAccel = 4000.0;  // deg/s^2

struct RotationCommand {
  double target_angle = 0.0;  // deg, absolute
  double peak_speed = 0.0;    // deg/s
  double accel = kDefaultPalmAccel;
};

struct SlipModel {
  double hold_torque = 0.0;           // N*mm, vacuum contribution
  double friction_coeff = 0.8;
  double cup_effective_radius = 0.0;  // mm
};

/// hold_torque = vacuum_hold_force * cup_effective_radius.
SlipModel slip_model_from(const GripperConfig& cfg);
/// Throws ValidationError unless every field is strictly positive.
const SlipModel& validate_slip_model(const SlipModel& slip);

/// What the palm is carrying.
struct PalmLoad {
  ObjectSpec object;
  bool obstructed = false;       // draped into the finger gaps / edge on a finger
  double com_eccentricity = 0.0; // mm
};

/// The load in `state`, if an object rests on the palm.
std::optional<PalmLoad> palm_load(const GripperState& state);

/// Closed-form trapezoid/triangle profile between two angles.
class RotationProfile {
 public:
  RotationProfile(double start, double target, double peak_speed, double accel);

  double duration() const { return duration_; }
  double peak_reached() const { return peak_; }
  bool triangular() const { return cruise_time_ == 0.0 && distance_ > 0.0 && peak_ < peak_cmd_; }
  double position(double t) const;
  double velocity(double t) const;
  /// Signed acceleration in effect at time t (piecewise constant).
  double acceleration(double t) const;

 private:
  double start_, dir_, distance_, accel_, peak_cmd_, peak_;
  double ramp_time_ = 0.0;
  double cruise_time_ = 0.0;
  double duration_ = 0.0;
};

struct PalmSample {
  double t = 0.0;         // s since the move started
  double palm_angle = 0.0;
  double palm_velocity = 0.0;
  double object_yaw = 0.0;
};

struct RotationOutcome {
  double final_angle = 0.0;
  double duration = 0.0;          // s, palm motion only
  bool slipped = false;
  double slip_angle_error = 0.0;  // deg, palm travel minus object travel
  double object_yaw_change = 0.0;
  double torque_required = 0.0;   // N*mm, peak over the move
  double torque_available = 0.0;  // N*mm
  std::vector<PalmSample> samples;  // 1 kHz, first at t=0, last at t=duration
};

/// Torque the cup plus friction can resist for `obj`.
double available_torque(const ObjectSpec& obj, const SlipModel& slip, bool vacuum_on);
/// Peak torque needed to carry `load` through a move with |alpha| = accel.
double required_torque(const PalmLoad& load, double accel);

/// Runs a palm move. Throws RangeError (no motion) when the target is outside
/// the servo range or the speed is outside (0, max_palm_speed].
RotationOutcome rotate_to(const RotationCommand& cmd, const GripperState& state,
                          const std::optional<PalmLoad>& load, const SlipModel& slip,
                          double max_palm_speed);

/// Returns `state` with the valve switched. Idempotent.
GripperState set_vacuum(bool on, GripperState state);

/// Whether the cup alone can lift `obj` (palm facing down, no fingers).
bool suction_can_lift(const ObjectSpec& obj, const GripperConfig& cfg);

/// Largest peak speed in (0, max_palm_speed] for which a 180° move reports no
/// slip; 0 when even 1 deg/s slips.
double max_noslip_speed(const ObjectSpec& obj, const SlipModel& slip, bool vacuum_on, double accel,
                        double max_palm_speed);

/// Smallest vacuum_hold_force (N) that gives every object in `objects` the
/// requested torque margin (0.25 = 25 %) at `accel`, given cup radius and mu.
double required_hold_force(const std::vector<ObjectSpec>& objects, const GripperConfig& cfg,
                           double accel, double margin);

}  // namespace palmgrip
