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

#include "palmgrip/palm_rotor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "palmgrip/error.hpp"

namespace palmgrip {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
// Object keeps sliding after the palm stops; give up after this long.
constexpr double kMaxSettle = 5.0;  // s

// Yaw inertia, solid cylinder about its axis. g*mm^2.
double yaw_inertia(const ObjectSpec& obj) {
  const double r = obj.characteristic_width / 2.0;
  return 0.5 * obj.mass * r * r;
}

// N*mm from g*mm^2 and rad/s^2.
double inertial_torque(double inertia, double alpha_rad) { return inertia * alpha_rad * 1e-6; }

double weight_newtons(const ObjectSpec& obj) { return obj.mass * 1e-3 * kGravity; }

}  // namespace

SlipModel slip_model_from(const GripperConfig& cfg) {
  return SlipModel{cfg.vacuum_hold_force * cfg.cup_effective_radius, cfg.friction_coeff,
                   cfg.cup_effective_radius};
}

const SlipModel& validate_slip_model(const SlipModel& slip) {
  std::vector<std::string> issues;
  if (!(slip.hold_torque > 0.0)) issues.emplace_back("hold_torque must be > 0");
  if (!(slip.friction_coeff > 0.0)) issues.emplace_back("friction_coeff must be > 0");
  if (!(slip.cup_effective_radius > 0.0)) issues.emplace_back("cup_effective_radius must be > 0");
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return slip;
}

std::optional<PalmLoad> palm_load(const GripperState& state) {
  const auto& held = state.held();
  if (!held || held->hold_mode != HoldMode::on_palm) return std::nullopt;
  return PalmLoad{held->object, held->rotation_obstructed, held->com_eccentricity};
}

RotationProfile::RotationProfile(double start, double target, double peak_speed, double accel)
    : start_(start),
      dir_(target >= start ? 1.0 : -1.0),
      distance_(std::abs(target - start)),
      accel_(accel),
      peak_cmd_(peak_speed),
      peak_(peak_speed) {
  if (!(peak_speed > 0.0) || !(accel > 0.0)) {
    throw RangeError("profile needs positive peak speed and acceleration");
  }
  if (distance_ == 0.0) {
    peak_ = 0.0;
    return;
  }
  if (distance_ >= peak_speed * peak_speed / accel) {
    ramp_time_ = peak_speed / accel;
    cruise_time_ = (distance_ - peak_speed * peak_speed / accel) / peak_speed;
  } else {
    peak_ = std::sqrt(distance_ * accel);
    ramp_time_ = peak_ / accel;
    cruise_time_ = 0.0;
  }
  duration_ = 2.0 * ramp_time_ + cruise_time_;
}

double RotationProfile::position(double t) const {
  if (t <= 0.0 || distance_ == 0.0) return start_;
  if (t >= duration_) return start_ + dir_ * distance_;
  double s;
  if (t < ramp_time_) {
    s = 0.5 * accel_ * t * t;
  } else if (t < ramp_time_ + cruise_time_) {
    s = 0.5 * accel_ * ramp_time_ * ramp_time_ + peak_ * (t - ramp_time_);
  } else {
    const double rem = duration_ - t;
    s = distance_ - 0.5 * accel_ * rem * rem;
  }
  return start_ + dir_ * s;
}

double RotationProfile::velocity(double t) const {
  if (t <= 0.0 || t >= duration_) return 0.0;
  if (t < ramp_time_) return dir_ * accel_ * t;
  if (t < ramp_time_ + cruise_time_) return dir_ * peak_;
  return dir_ * accel_ * (duration_ - t);
}

double RotationProfile::acceleration(double t) const {
  if (t < 0.0 || t >= duration_) return 0.0;
  if (t < ramp_time_) return dir_ * accel_;
  if (t < ramp_time_ + cruise_time_) return 0.0;
  return -dir_ * accel_;
}

double available_torque(const ObjectSpec& obj, const SlipModel& slip, bool vacuum_on) {
  const double friction = slip.friction_coeff * weight_newtons(obj) * slip.cup_effective_radius;
  return friction + (vacuum_on ? slip.hold_torque : 0.0);
}

double required_torque(const PalmLoad& load, double accel) {
  return inertial_torque(yaw_inertia(load.object), accel * kDegToRad) +
         weight_newtons(load.object) * load.com_eccentricity;
}

RotationOutcome rotate_to(const RotationCommand& cmd, const GripperState& state,
                          const std::optional<PalmLoad>& load, const SlipModel& slip,
                          double max_palm_speed) {
  const Interval range = state.servo_range();
  if (!range.contains(cmd.target_angle)) {
    throw RangeError("target_angle " + std::to_string(cmd.target_angle) +
                     " outside servo_range [" + std::to_string(range.lo) + ", " +
                     std::to_string(range.hi) + "]");
  }
  if (!(cmd.peak_speed > 0.0 && cmd.peak_speed <= max_palm_speed)) {
    throw RangeError("peak_speed " + std::to_string(cmd.peak_speed) + " outside (0, " +
                     std::to_string(max_palm_speed) + "]");
  }
  if (!(cmd.accel > 0.0)) throw RangeError("accel must be > 0");

  const double start = state.palm_angle();
  const RotationProfile profile(start, cmd.target_angle, cmd.peak_speed, cmd.accel);
  RotationOutcome out;
  out.duration = profile.duration();
  out.final_angle = cmd.target_angle;

  const double yaw0 = state.held() ? state.held()->object_yaw : start;
  const bool carrying = load.has_value();
  const bool obstructed = carrying && load->obstructed;
  double inertia = 0.0;
  double static_load = 0.0;  // m*g*e, N*mm
  if (carrying) {
    inertia = yaw_inertia(load->object);
    static_load = weight_newtons(load->object) * load->com_eccentricity;
    out.torque_available = available_torque(load->object, slip, state.vacuum_on());
  }

  // Object state: while stuck it rides the palm at a fixed offset.
  bool stuck = true;
  double offset = yaw0 - start;
  double obj_yaw = yaw0;
  double obj_vel = 0.0;  // deg/s
  const double alpha_max_rad =
      carrying && inertia > 0.0
          ? std::max(0.0, out.torque_available - static_load) / (inertia * 1e-6)
          : 0.0;
  const double alpha_max = alpha_max_rad * kRadToDeg;

  const auto steps = static_cast<long>(std::ceil(out.duration / kPalmStep));
  out.samples.reserve(static_cast<std::size_t>(steps) + 1);
  auto record = [&](double t) {
    out.samples.push_back(
        {t, profile.position(t), profile.velocity(t), carrying ? obj_yaw : profile.position(t)});
  };
  record(0.0);

  auto advance_object = [&](double t0, double t1) {
    const double dt = t1 - t0;
    const double palm_accel = profile.acceleration(0.5 * (t0 + t1));
    const bool moving = profile.velocity(0.5 * (t0 + t1)) != 0.0 || palm_accel != 0.0;
    const double demand =
        inertial_torque(inertia, std::abs(palm_accel) * kDegToRad) + (moving ? static_load : 0.0);
    out.torque_required = std::max(out.torque_required, demand);
    if (stuck) {
      if (demand <= out.torque_available) {
        obj_yaw = profile.position(t1) + offset;
        obj_vel = profile.velocity(t1);
        return;
      }
      stuck = false;
      out.slipped = true;
    }
    // Sliding: friction drives the object toward the palm's velocity.
    const double palm_vel_end = profile.velocity(t1);
    const double wanted = (palm_vel_end - obj_vel) / dt;
    const double a = std::clamp(wanted, -alpha_max, alpha_max);
    obj_yaw += obj_vel * dt + 0.5 * a * dt * dt;
    obj_vel += a * dt;
    if (std::abs(wanted) <= alpha_max && demand <= out.torque_available) {
      stuck = true;
      obj_vel = palm_vel_end;
      offset = obj_yaw - profile.position(t1);
    }
  };

  if (obstructed) {
    out.slipped = true;
    out.torque_required = required_torque(*load, cmd.accel);
    for (long k = 1; k <= steps; ++k) record(std::min(k * kPalmStep, out.duration));
  } else {
    for (long k = 1; k <= steps; ++k) {
      const double t0 = (k - 1) * kPalmStep;
      const double t1 = std::min(k * kPalmStep, out.duration);
      if (carrying) advance_object(t0, t1);
      record(t1);
    }
    if (carrying && !stuck) {
      // Palm is parked; let friction bring the object to rest.
      double t = out.duration;
      while (!stuck && t < out.duration + kMaxSettle) {
        advance_object(t, t + kPalmStep);
        t += kPalmStep;
      }
    }
  }

  if (carrying) {
    out.object_yaw_change = obj_yaw - yaw0;
    out.slip_angle_error = (cmd.target_angle - start) - out.object_yaw_change;
  }
  return out;
}

GripperState set_vacuum(bool on, GripperState state) {
  state.set_vacuum(on);
  return state;
}

bool suction_can_lift(const ObjectSpec& obj, const GripperConfig& cfg) {
  return cfg.vacuum_hold_force > weight_newtons(obj);
}

double max_noslip_speed(const ObjectSpec& obj, const SlipModel& slip, bool vacuum_on, double accel,
                        double max_palm_speed) {
  GripperState probe(Interval{-90.0, 90.0});
  probe.set_palm(-90.0, 0.0);
  const PalmLoad load{obj, false, 0.0};
  auto slips = [&](double speed) {
    probe.set_vacuum(vacuum_on);
    return rotate_to({90.0, speed, accel}, probe, load, slip, max_palm_speed).slipped;
  };
  if (!slips(max_palm_speed)) return max_palm_speed;
  // Slower probes would need an unbounded sample trace.
  constexpr double kSlowestProbe = 1.0;  // deg/s
  double lo = std::min(kSlowestProbe, max_palm_speed);
  double hi = max_palm_speed;
  if (slips(lo)) return 0.0;
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    (slips(mid) ? hi : lo) = mid;
  }
  return lo;
}

double required_hold_force(const std::vector<ObjectSpec>& objects, const GripperConfig& cfg,
                           double accel, double margin) {
  const SlipModel no_vacuum{0.0, cfg.friction_coeff, cfg.cup_effective_radius};
  double force = 0.0;
  for (const auto& obj : objects) {
    const double need = (1.0 + margin) * required_torque({obj, false, cfg.com_eccentricity}, accel);
    const double friction = available_torque(obj, no_vacuum, false);
    force = std::max(force, (need - friction) / cfg.cup_effective_radius);
  }
  return force;
}

}  // namespace palmgrip
