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

// Finger actuation: voltage -> bend response curves, the single-input
// calibration that maps one command u in [0,1] onto three per-finger
// regulator voltage ranges, and constant-curvature fingertip geometry.
//
// Frame convention for fingertip positions: cylindrical about the palm axis.
// `radial` is the distance from the axis, `vertical` is the height above
// the palm plane along the palm normal. With the gripper facing down a
// straight finger points away from the palm face, so its tip has negative
// `vertical`.

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "palmgrip/core_model.hpp"

namespace palmgrip {

/// Number of u samples used for the calibration residual and monotonicity
/// sweeps: u = k/100, k = 0..100.
inline constexpr int kCommandGridPoints = 101;

struct CurveSample {
  double volts = 0.0;
  double bend = 0.0;  // deg
  friend bool operator==(const CurveSample&, const CurveSample&) = default;
};

/// Monotone piecewise-linear regulator voltage -> finger bend map.
class ResponseCurve {
 public:
  /// Flat placeholder (0 V -> 0°, 5 V -> 0°).
  ResponseCurve() : samples_{{0.0, 0.0}, {5.0, 0.0}} {}
  /// Validates: >= 2 samples, volts in [0,5] strictly increasing, bends
  /// non-decreasing, first bend 0, last bend <= 200.
  explicit ResponseCurve(std::vector<CurveSample> samples);

  /// Bend at `volts`, clamped to the sampled voltage span.
  double bend_at(double volts) const;
  /// Lowest voltage whose bend equals `bend`; nullopt if unreachable.
  std::optional<double> voltage_for(double bend) const;
  double max_bend() const { return samples_.back().bend; }
  std::span<const CurveSample> samples() const { return samples_; }

  friend bool operator==(const ResponseCurve&, const ResponseCurve&) = default;

 private:
  std::vector<CurveSample> samples_;
};

using CurveSet = std::array<ResponseCurve, kFingerCount>;

struct Calibration {
  std::array<Interval, kFingerCount> ranges;  // volts, per finger
  double alignment_residual = 0.0;            // deg
  friend bool operator==(const Calibration&, const Calibration&) = default;
};

/// Inverts each curve at the target bend endpoints and reports the worst
/// bend disagreement between fingers over the u grid.
/// Throws DomainError for a malformed target, UnreachableTargetError when a
/// finger's curve cannot reach it.
Calibration calibrate(const CurveSet& curves, Interval target_bend_range);

/// Max over the u grid of (max_i bend_i - min_i bend_i).
double alignment_residual(const CurveSet& curves, const std::array<Interval, kFingerCount>& ranges);

std::array<double, kFingerCount> command_to_voltages(double u, const Calibration& cal);
std::array<double, kFingerCount> bend_angles(double u, const Calibration& cal,
                                             const CurveSet& curves);

struct TipPosition {
  double radial = 0.0;    // mm
  double vertical = 0.0;  // mm
};

/// Tip of a finger of length L bent into a circular arc of total angle
/// `bend`, mounted at finger_mount_radius and splayed outward by
/// splay_angle. The arc curls toward the palm axis.
TipPosition fingertip_position(double bend, const GripperConfig& cfg, FingerType type);

/// A full finger set: curves plus their calibration.
struct FingerSet {
  FingerType type = FingerType::printed;
  CurveSet curves;
  Interval target_bend_range;
  Calibration calibration;
};

/// Loads a curve file ({"finger_type", "target_bend_range", "curves": [...]})
/// and calibrates it.
FingerSet load_finger_set(const std::filesystem::path& path);
/// Calibration export: the curve file format plus ranges and residual.
std::string export_calibration(const FingerSet& set);

/// Inscribed grasp diameter: 2 * min over fingers of the tip radial
/// coordinate, floored at 0.
double aperture(double u, const Calibration& cal, const CurveSet& curves, const GripperConfig& cfg,
                FingerType type);
inline double aperture(double u, const FingerSet& set, const GripperConfig& cfg) {
  return aperture(u, set.calibration, set.curves, cfg, set.type);
}

/// Smallest u at which the fingertips meet (aperture reaches 0), and the tip
/// height above the palm plane at that point. nullopt if they never meet.
struct Convergence {
  double u = 0.0;
  double height = 0.0;  // mm, measured away from the palm face
};
std::optional<Convergence> convergence(const FingerSet& set, const GripperConfig& cfg);

enum class FeasibilityReason { ok, mass_exceeds_capacity, too_wide, too_small };
std::string_view to_string(FeasibilityReason r);

struct FeasibilityReport {
  bool feasible = false;
  FeasibilityReason reason = FeasibilityReason::ok;
  std::optional<double> grasp_u;
  bool pinch_required = false;  // cloth under moulded fingers
  bool reach_limited = false;   // printed fingers shorter than the object; stability penalty only
};

FeasibilityReport grasp_feasible(const ObjectSpec& obj, FingerType type, const Calibration& cal,
                                 const CurveSet& curves, const GripperConfig& cfg);
inline FeasibilityReport grasp_feasible(const ObjectSpec& obj, const FingerSet& set,
                                        const GripperConfig& cfg) {
  return grasp_feasible(obj, set.type, set.calibration, set.curves, cfg);
}

}  // namespace palmgrip
