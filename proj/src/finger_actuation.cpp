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

#include "palmgrip/finger_actuation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "palmgrip/error.hpp"
#include "palmgrip/json_io.hpp"

namespace palmgrip {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double grid_u(int k) { return static_cast<double>(k) / (kCommandGridPoints - 1); }

void check_command(double u) {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw DomainError("finger command u=" + std::to_string(u) + " outside [0,1]");
  }
}

// sin(t)/t and (1-cos t)/t with series near zero.
double sinc(double t) { return std::abs(t) < 1e-6 ? 1.0 - t * t / 6.0 : std::sin(t) / t; }
double versinc(double t) { return std::abs(t) < 1e-6 ? t / 2.0 : (1.0 - std::cos(t)) / t; }

}  // namespace

ResponseCurve::ResponseCurve(std::vector<CurveSample> samples) : samples_(std::move(samples)) {
  std::vector<std::string> issues;
  if (samples_.size() < 2) {
    issues.emplace_back("samples: need at least 2");
  } else {
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const auto& s = samples_[i];
      if (!(s.volts >= 0.0 && s.volts <= 5.0)) {
        issues.push_back("samples[" + std::to_string(i) + "].volts outside [0,5]");
      }
      if (i > 0 && !(s.volts > samples_[i - 1].volts)) {
        issues.push_back("samples[" + std::to_string(i) + "].volts not strictly increasing");
      }
      if (i > 0 && !(s.bend >= samples_[i - 1].bend)) {
        issues.push_back("samples[" + std::to_string(i) + "].bend decreases");
      }
    }
    if (samples_.front().bend != 0.0) issues.emplace_back("samples[0].bend must be 0");
    if (!(samples_.back().bend <= kMaxBendDeg)) issues.emplace_back("max_bend exceeds 200 deg");
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

double ResponseCurve::bend_at(double volts) const {
  if (volts <= samples_.front().volts) return samples_.front().bend;
  if (volts >= samples_.back().volts) return samples_.back().bend;
  auto hi = std::upper_bound(samples_.begin(), samples_.end(), volts,
                             [](double v, const CurveSample& s) { return v < s.volts; });
  auto lo = std::prev(hi);
  const double t = (volts - lo->volts) / (hi->volts - lo->volts);
  return lo->bend + t * (hi->bend - lo->bend);
}

std::optional<double> ResponseCurve::voltage_for(double bend) const {
  if (bend < samples_.front().bend || bend > samples_.back().bend) return std::nullopt;
  // First sample reaching the bend; on a flat run that is its lowest voltage.
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i].bend >= bend) {
      if (i == 0 || samples_[i].bend == bend) return samples_[i].volts;
      const auto& lo = samples_[i - 1];
      const auto& hi = samples_[i];
      const double t = (bend - lo.bend) / (hi.bend - lo.bend);
      return lo.volts + t * (hi.volts - lo.volts);
    }
  }
  return std::nullopt;
}

double alignment_residual(const CurveSet& curves,
                          const std::array<Interval, kFingerCount>& ranges) {
  double worst = 0.0;
  for (int k = 0; k < kCommandGridPoints; ++k) {
    const double u = grid_u(k);
    double lo = kMaxBendDeg + 1.0;
    double hi = -1.0;
    for (int i = 0; i < kFingerCount; ++i) {
      const double b = curves[i].bend_at(ranges[i].lo + u * (ranges[i].hi - ranges[i].lo));
      lo = std::min(lo, b);
      hi = std::max(hi, b);
    }
    worst = std::max(worst, hi - lo);
  }
  return worst;
}

Calibration calibrate(const CurveSet& curves, Interval target) {
  if (!(target.lo >= 0.0 && target.lo < target.hi)) {
    throw DomainError("target_bend_range must satisfy 0 <= b_min < b_max");
  }
  Calibration cal;
  for (int i = 0; i < kFingerCount; ++i) {
    const auto lo = curves[i].voltage_for(target.lo);
    const auto hi = curves[i].voltage_for(target.hi);
    if (!lo || !hi) {
      throw UnreachableTargetError(
          i, "finger " + std::to_string(i) + " cannot reach target bend range (max_bend " +
                 std::to_string(curves[i].max_bend()) + " deg)");
    }
    if (!(*lo < *hi)) {
      throw UnreachableTargetError(i, "finger " + std::to_string(i) +
                                          " response is flat across the target range");
    }
    cal.ranges[i] = Interval{*lo, *hi};
  }
  cal.alignment_residual = alignment_residual(curves, cal.ranges);
  return cal;
}

std::array<double, kFingerCount> command_to_voltages(double u, const Calibration& cal) {
  check_command(u);
  std::array<double, kFingerCount> v{};
  for (int i = 0; i < kFingerCount; ++i) {
    const auto& r = cal.ranges[i];
    v[i] = std::clamp(r.lo + u * (r.hi - r.lo), 0.0, 5.0);
  }
  return v;
}

std::array<double, kFingerCount> bend_angles(double u, const Calibration& cal,
                                             const CurveSet& curves) {
  const auto volts = command_to_voltages(u, cal);
  std::array<double, kFingerCount> b{};
  for (int i = 0; i < kFingerCount; ++i) b[i] = curves[i].bend_at(volts[i]);
  return b;
}

TipPosition fingertip_position(double bend, const GripperConfig& cfg, FingerType type) {
  if (!(bend >= 0.0 && bend <= kMaxBendDeg)) {
    throw RangeError("bend " + std::to_string(bend) + " outside [0, 200] deg");
  }
  const double length = cfg.finger_length(type);
  const double theta = bend * kDegToRad;
  const double splay = cfg.splay_angle * kDegToRad;
  // Arc endpoint in the finger's own frame: `along` the mount direction,
  // `inward` toward the palm axis.
  const double along = length * sinc(theta);
  const double inward = length * versinc(theta);
  // Mount direction (sin s, -cos s); inward normal (-cos s, -sin s).
  TipPosition tip;
  tip.radial = cfg.finger_mount_radius + along * std::sin(splay) - inward * std::cos(splay);
  tip.vertical = -along * std::cos(splay) - inward * std::sin(splay);
  return tip;
}

double aperture(double u, const Calibration& cal, const CurveSet& curves, const GripperConfig& cfg,
                FingerType type) {
  const auto bends = bend_angles(u, cal, curves);
  double min_radial = fingertip_position(bends[0], cfg, type).radial;
  for (int i = 1; i < kFingerCount; ++i) {
    min_radial = std::min(min_radial, fingertip_position(bends[i], cfg, type).radial);
  }
  return 2.0 * std::max(0.0, min_radial);
}

std::optional<Convergence> convergence(const FingerSet& set, const GripperConfig& cfg) {
  if (aperture(1.0, set, cfg) > 0.0) return std::nullopt;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (aperture(mid, set, cfg) > 0.0 ? lo : hi) = mid;
  }
  const auto bends = bend_angles(hi, set.calibration, set.curves);
  // Height of the finger that reaches the axis first.
  int first = 0;
  double best = fingertip_position(bends[0], cfg, set.type).radial;
  for (int i = 1; i < kFingerCount; ++i) {
    const double r = fingertip_position(bends[i], cfg, set.type).radial;
    if (r < best) {
      best = r;
      first = i;
    }
  }
  return Convergence{hi, -fingertip_position(bends[first], cfg, set.type).vertical};
}

std::string_view to_string(FeasibilityReason r) {
  switch (r) {
    case FeasibilityReason::ok: return "ok";
    case FeasibilityReason::mass_exceeds_capacity: return "mass_exceeds_capacity";
    case FeasibilityReason::too_wide: return "too_wide";
    case FeasibilityReason::too_small: return "too_small";
  }
  return "?";
}

FeasibilityReport grasp_feasible(const ObjectSpec& obj, FingerType type, const Calibration& cal,
                                 const CurveSet& curves, const GripperConfig& cfg) {
  FeasibilityReport report;
  if (obj.mass > cfg.mass_capacity) {
    report.reason = FeasibilityReason::mass_exceeds_capacity;
    return report;
  }
  const double straight_reach =
      cfg.finger_length(type) * std::cos(cfg.splay_angle * kDegToRad);
  report.reach_limited = type == FingerType::printed && obj.height > straight_reach;

  const double width = obj.characteristic_width;
  const double band_lo = std::max(0.0, width - cfg.squeeze_margin);
  const double open = aperture(0.0, cal, curves, cfg, type);
  const double closed = aperture(1.0, cal, curves, cfg, type);

  if (obj.cloth_like) {
    // Cloth is gathered rather than enclosed; width never rules it out.
    report.feasible = true;
    report.pinch_required = type == FingerType::moulded_oval;
    report.grasp_u = 1.0;
    if (width <= open) {
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (aperture(mid, cal, curves, cfg, type) > width ? lo : hi) = mid;
      }
      report.grasp_u = hi;
    }
    return report;
  }

  if (band_lo > open) {
    report.reason = FeasibilityReason::too_wide;
    return report;
  }
  if (width < closed) {
    report.reason = FeasibilityReason::too_small;
    return report;
  }
  // Aperture is non-increasing in u; aim for the middle of the contact band.
  const double aim = std::clamp(0.5 * (band_lo + width), closed, open);
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (aperture(mid, cal, curves, cfg, type) > aim ? lo : hi) = mid;
  }
  const double got = aperture(hi, cal, curves, cfg, type);
  if (got < band_lo || got > width) {
    report.reason = got > width ? FeasibilityReason::too_wide : FeasibilityReason::too_small;
    return report;
  }
  report.feasible = true;
  report.grasp_u = hi;
  return report;
}

FingerSet load_finger_set(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  const std::string ctx = path.string();
  // Calibration exports load too; their ranges are recomputed, not trusted.
  require_known_keys(doc, {"note", "finger_type", "target_bend_range", "curves", "alignment_residual"},
                     ctx);
  FingerSet set;
  set.type = parse_finger_type(doc.at("finger_type").get<std::string>());
  set.target_bend_range = doc.at("target_bend_range").get<Interval>();
  const json& curves = doc.at("curves");
  if (!curves.is_array() || curves.size() != kFingerCount) {
    throw ParseError(ctx + ": expected exactly three curves");
  }
  std::array<std::optional<ResponseCurve>, kFingerCount> slots;
  for (const auto& c : curves) {
    require_known_keys(c, {"finger", "samples", "v_lo", "v_hi"}, ctx + ".curves[]");
    const int finger = c.at("finger").get<int>();
    if (finger < 0 || finger >= kFingerCount || slots[finger]) {
      throw ParseError(ctx + ": bad or duplicate finger index " + std::to_string(finger));
    }
    std::vector<CurveSample> samples;
    for (const auto& s : c.at("samples")) {
      if (!s.is_array() || s.size() != 2) throw ParseError(ctx + ": sample must be [volts, deg]");
      samples.push_back({s[0].get<double>(), s[1].get<double>()});
    }
    slots[finger].emplace(std::move(samples));
  }
  set.curves = CurveSet{*slots[0], *slots[1], *slots[2]};
  set.calibration = calibrate(set.curves, set.target_bend_range);
  return set;
}

std::string export_calibration(const FingerSet& set) {
  json doc;
  doc["finger_type"] = to_string(set.type);
  doc["target_bend_range"] = set.target_bend_range;
  doc["alignment_residual"] = set.calibration.alignment_residual;
  json curves = json::array();
  for (int i = 0; i < kFingerCount; ++i) {
    json samples = json::array();
    for (const auto& s : set.curves[i].samples()) samples.push_back({s.volts, s.bend});
    curves.push_back({{"finger", i},
                      {"samples", samples},
                      {"v_lo", set.calibration.ranges[i].lo},
                      {"v_hi", set.calibration.ranges[i].hi}});
  }
  doc["curves"] = curves;
  return doc.dump(2);
}

}  // namespace palmgrip
