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

// Rule-driven object interaction model.
//
// There is no contact mechanics here. Each stochastic interaction (grasp,
// flip hold, drop onto the palm) looks up exactly one rule in
// failure_rules.json and draws its outcome; re-grasp is decided from finger
// geometry. Every draw goes through an OutcomeChooser so the same code path
// serves seeded Monte-Carlo, the deterministic golden mode, and exhaustive
// branch enumeration.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "palmgrip/core_model.hpp"
#include "palmgrip/error.hpp"
#include "palmgrip/finger_actuation.hpp"
#include "palmgrip/json_io.hpp"
#include "palmgrip/palm_rotor.hpp"

namespace palmgrip {

enum class GraspOutcome { ok, pushed_off_center, pinch_then_ok, twisted_out };
enum class HoldOutcome { held, sagged_drop, lost_grip_deform };
enum class DropOutcome { centered, off_center, tipped, bounced, draped };

std::string_view to_string(GraspOutcome o);
std::string_view to_string(HoldOutcome o);
std::string_view to_string(DropOutcome o);

/// Stages whose outcome comes from the rule table.
inline constexpr std::array<SequenceStage, 4> kRuleStages = {
    SequenceStage::grasp, SequenceStage::flip_up, SequenceStage::drop_to_palm,
    SequenceStage::flip_down};
bool is_rule_stage(SequenceStage s);

struct RuleOutcome {
  std::string outcome;  // stage vocabulary, e.g. "tipped"
  double probability = 0.0;
  // Overrides the default failure kind of a fatal outcome.
  std::optional<FailureKind> failure_kind;
};

struct FailureRule {
  std::string id;
  SequenceStage stage = SequenceStage::grasp;
  std::vector<FingerType> finger_types;
  std::vector<ShapeClass> shape_classes;
  std::optional<double> min_width;  // mm, inclusive
  std::optional<double> max_width;  // mm, exclusive
  std::vector<RuleOutcome> outcomes;
  std::string deterministic_outcome;
  std::string paper_quote;

  bool matches(const ObjectSpec& obj, FingerType finger, SequenceStage s) const;
  std::size_t deterministic_index() const;
  /// Failure kind produced by outcome `i`, nullopt when the outcome is not fatal.
  std::optional<FailureKind> failure_of(std::size_t i) const;
  /// Non-fatal note carried by outcome `i` (pushed then re-centred, ...).
  std::optional<FailureKind> note_of(std::size_t i) const;
  /// Sum of probabilities of the non-fatal outcomes.
  double success_probability() const;
};

class RuleTable {
 public:
  RuleTable() = default;
  explicit RuleTable(std::vector<FailureRule> rules) : rules_(std::move(rules)) {}

  /// Parses and validates the table, then checks completeness over
  /// `reference_objects`. Throws ParseError/ValidationError.
  static RuleTable from_json(const json& doc, const std::vector<ObjectSpec>& reference_objects);
  static RuleTable load(const std::filesystem::path& path,
                        const std::vector<ObjectSpec>& reference_objects);

  /// The single rule matching; throws StateError on none or several.
  const FailureRule& lookup(const ObjectSpec& obj, FingerType finger, SequenceStage stage) const;
  /// Gaps and overlaps for every (object, finger type, rule stage).
  std::vector<std::string> completeness_issues(const std::vector<ObjectSpec>& objects) const;
  const std::vector<FailureRule>& rules() const { return rules_; }

 private:
  std::vector<FailureRule> rules_;
};

/// Identifies one world decision; the chooser turns it into a stream.
struct DecisionKey {
  std::uint64_t seed = 0;
  std::string object;
  FingerType finger = FingerType::printed;
  SequenceStage stage = SequenceStage::grasp;
  int attempt = 0;

  std::uint64_t stream(std::string_view purpose) const;
};

class OutcomeChooser {
 public:
  virtual ~OutcomeChooser() = default;
  /// Index into rule.outcomes.
  virtual std::size_t choose(const FailureRule& rule, const DecisionKey& key) = 0;
  /// Uniform [0,1) for continuous draws (re-grasp yaw error).
  virtual double uniform(const DecisionKey& key, std::string_view purpose);
};

/// Draws from the rule probabilities with CounterRng.
class SeededChooser : public OutcomeChooser {
 public:
  std::size_t choose(const FailureRule& rule, const DecisionKey& key) override;
};

/// Always the rule's deterministic_outcome.
class DeterministicChooser : public OutcomeChooser {
 public:
  std::size_t choose(const FailureRule& rule, const DecisionKey& key) override;
};

/// Thrown by grasp_attempt for objects grasp_feasible rejects.
class FeasibilityError : public Error {
 public:
  explicit FeasibilityError(FeasibilityReport report);
  const FeasibilityReport& report() const { return report_; }

 private:
  FeasibilityReport report_;
};

struct GraspResult {
  GraspOutcome outcome = GraspOutcome::ok;
  FeasibilityReport feasibility;
  std::optional<FailureKind> failure;  // set for fatal outcomes
  std::optional<FailureKind> note;
};

struct HoldResult {
  HoldOutcome outcome = HoldOutcome::held;
  std::optional<FailureKind> failure;
};

struct DropResult {
  DropOutcome outcome = DropOutcome::centered;
  double landing_yaw = 0.0;  // deg, object yaw on arrival
  bool on_palm = true;
  bool rotation_obstructed = false;
  double com_eccentricity = 0.0;
  std::optional<FailureKind> failure;
};

enum class RegraspKind { ok, converge_regrasp_fail, displaced_on_regrasp };
std::string_view to_string(RegraspKind k);

struct RegraspResult {
  RegraspKind kind = RegraspKind::ok;
  double yaw_error = 0.0;  // deg
};

/// Largest |yaw error| a re-grasp can introduce on a displaced object.
inline constexpr double kRegraspYawErrorBound = 15.0;

/// Everything the world model needs: geometry, finger sets, rule table.
class World {
 public:
  World(GripperConfig cfg, FingerSet moulded, FingerSet printed, RuleTable rules);

  /// Reads gripper_config.json, curves_*.json, failure_rules.json and
  /// objects.json from `dir` (defaults to data_dir()).
  static World load(const std::filesystem::path& dir);
  static World load_default();

  const GripperConfig& config() const { return cfg_; }
  const FingerSet& fingers(FingerType type) const;
  const RuleTable& rules() const { return rules_; }
  SlipModel slip_model() const { return slip_model_from(cfg_); }
  /// Height above the palm at which the set's fingertips meet, if they do.
  std::optional<double> convergence_height(FingerType type) const;

  FeasibilityReport feasibility(const ObjectSpec& obj, FingerType type) const;

  /// Gripper facing down over the object. Throws FeasibilityError.
  GraspResult grasp_attempt(const ObjectSpec& obj, FingerType finger, OutcomeChooser& chooser,
                            const DecisionKey& key) const;
  /// Object in the fingers while the gripper turns (FLIP_UP or FLIP_DOWN).
  HoldResult flip_hold_check(const ObjectSpec& obj, FingerType finger, SequenceStage stage,
                             OutcomeChooser& chooser, const DecisionKey& key) const;
  /// Throws StateError unless facing up with the object in the fingers.
  DropResult drop_onto_palm(const GripperState& state, FingerType finger, OutcomeChooser& chooser,
                            const DecisionKey& key) const;
  /// Throws StateError unless the object rests on the palm.
  RegraspResult regrasp(const GripperState& state, FingerType finger, OutcomeChooser& chooser,
                        const DecisionKey& key) const;

  // Seed-only conveniences for callers without a chooser.
  DropResult drop_onto_palm(const ObjectSpec& obj, FingerType finger, std::uint64_t seed) const;
  GraspResult grasp_attempt(const ObjectSpec& obj, FingerType finger, std::uint64_t seed) const;
  HoldResult flip_hold_check(const ObjectSpec& obj, FingerType finger, std::uint64_t seed) const;

 private:
  GripperConfig cfg_;
  FingerSet moulded_;
  FingerSet printed_;
  RuleTable rules_;
  std::optional<double> moulded_convergence_;
  std::optional<double> printed_convergence_;
};

}  // namespace palmgrip
