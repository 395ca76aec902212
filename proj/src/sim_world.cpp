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

#include "palmgrip/sim_world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>

#include "palmgrip/rng.hpp"

namespace palmgrip {

namespace {

struct VocabEntry {
  std::string_view outcome;
  std::optional<FailureKind> failure;  // fatal outcomes
  std::optional<FailureKind> note;     // non-fatal annotation
};

constexpr std::array<VocabEntry, 4> kGraspVocab{{
    {"ok", std::nullopt, std::nullopt},
    {"pushed_off_center", std::nullopt, FailureKind::pushed_off_center},
    {"pinch_then_ok", std::nullopt, std::nullopt},
    {"twisted_out", FailureKind::twisted_out, std::nullopt},
}};

constexpr std::array<VocabEntry, 3> kHoldVocab{{
    {"held", std::nullopt, std::nullopt},
    {"sagged_drop", FailureKind::sagged_drop, std::nullopt},
    {"lost_grip_deform", FailureKind::lost_grip_deform, std::nullopt},
}};

constexpr std::array<VocabEntry, 5> kDropVocab{{
    {"centered", std::nullopt, std::nullopt},
    {"off_center", std::nullopt, std::nullopt},
    {"tipped", FailureKind::tipped_on_drop, std::nullopt},
    {"bounced", FailureKind::bounced_off, std::nullopt},
    {"draped", FailureKind::draped_on_fingers, std::nullopt},
}};

std::span<const VocabEntry> vocabulary(SequenceStage s) {
  switch (s) {
    case SequenceStage::grasp: return kGraspVocab;
    case SequenceStage::flip_up:
    case SequenceStage::flip_down: return kHoldVocab;
    case SequenceStage::drop_to_palm: return kDropVocab;
    default: return {};
  }
}

const VocabEntry& vocab_entry(SequenceStage s, std::string_view outcome) {
  for (const auto& v : vocabulary(s)) {
    if (v.outcome == outcome) return v;
  }
  throw ParseError("outcome '" + std::string(outcome) + "' not valid for stage " +
                   std::string(to_string(s)));
}

template <typename E, std::size_t N>
E enum_at(const std::array<VocabEntry, N>& vocab, std::string_view outcome) {
  for (std::size_t i = 0; i < N; ++i) {
    if (vocab[i].outcome == outcome) return static_cast<E>(i);
  }
  throw ParseError("unknown outcome '" + std::string(outcome) + "'");
}

FailureRule parse_rule(const json& j) {
  const std::string ctx = "failure_rules[" + j.value("id", std::string("?")) + "]";
  require_known_keys(j, {"id", "stage", "finger_types", "shape_classes", "min_width", "max_width",
                         "outcomes", "deterministic_outcome", "paper_quote"},
                     ctx);
  FailureRule r;
  r.id = j.at("id").get<std::string>();
  r.stage = parse_stage(j.at("stage").get<std::string>());
  if (!is_rule_stage(r.stage)) throw ParseError(ctx + ": stage is not rule-driven");
  for (const auto& f : j.at("finger_types")) r.finger_types.push_back(parse_finger_type(f.get<std::string>()));
  for (const auto& s : j.at("shape_classes")) r.shape_classes.push_back(parse_shape_class(s.get<std::string>()));
  if (j.contains("min_width")) r.min_width = j.at("min_width").get<double>();
  if (j.contains("max_width")) r.max_width = j.at("max_width").get<double>();
  double total = 0.0;
  for (const auto& o : j.at("outcomes")) {
    require_known_keys(o, {"outcome", "probability", "failure_kind"}, ctx + ".outcomes[]");
    RuleOutcome out;
    out.outcome = o.at("outcome").get<std::string>();
    out.probability = o.at("probability").get<double>();
    if (!(out.probability >= 0.0 && out.probability <= 1.0)) {
      throw ValidationError({ctx + ": probability of '" + out.outcome + "' outside [0,1]"});
    }
    const auto& entry = vocab_entry(r.stage, out.outcome);
    if (o.contains("failure_kind")) {
      if (!entry.failure) {
        throw ParseError(ctx + ": failure_kind given for non-fatal outcome '" + out.outcome + "'");
      }
      out.failure_kind = parse_failure_kind(o.at("failure_kind").get<std::string>());
    }
    total += out.probability;
    r.outcomes.push_back(std::move(out));
  }
  if (r.outcomes.empty()) throw ParseError(ctx + ": no outcomes");
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError({ctx + ": outcome probabilities sum to " + std::to_string(total)});
  }
  r.deterministic_outcome = j.at("deterministic_outcome").get<std::string>();
  r.deterministic_index();  // validates
  r.paper_quote = j.at("paper_quote").get<std::string>();
  if (r.finger_types.empty() || r.shape_classes.empty()) {
    throw ParseError(ctx + ": finger_types and shape_classes must be non-empty");
  }
  return r;
}

}  // namespace

std::string_view to_string(GraspOutcome o) { return kGraspVocab[static_cast<int>(o)].outcome; }
std::string_view to_string(HoldOutcome o) { return kHoldVocab[static_cast<int>(o)].outcome; }
std::string_view to_string(DropOutcome o) { return kDropVocab[static_cast<int>(o)].outcome; }

std::string_view to_string(RegraspKind k) {
  switch (k) {
    case RegraspKind::ok: return "ok";
    case RegraspKind::converge_regrasp_fail: return "converge_regrasp_fail";
    case RegraspKind::displaced_on_regrasp: return "displaced_on_regrasp";
  }
  return "?";
}

bool is_rule_stage(SequenceStage s) {
  return std::find(kRuleStages.begin(), kRuleStages.end(), s) != kRuleStages.end();
}

bool FailureRule::matches(const ObjectSpec& obj, FingerType finger, SequenceStage s) const {
  if (s != stage) return false;
  if (std::find(finger_types.begin(), finger_types.end(), finger) == finger_types.end()) return false;
  if (std::find(shape_classes.begin(), shape_classes.end(), obj.shape_class) ==
      shape_classes.end()) {
    return false;
  }
  if (min_width && obj.characteristic_width < *min_width) return false;
  if (max_width && obj.characteristic_width >= *max_width) return false;
  return true;
}

std::size_t FailureRule::deterministic_index() const {
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].outcome == deterministic_outcome) return i;
  }
  throw ParseError("rule " + id + ": deterministic_outcome '" + deterministic_outcome +
                   "' is not one of its outcomes");
}

std::optional<FailureKind> FailureRule::failure_of(std::size_t i) const {
  const auto& entry = vocab_entry(stage, outcomes.at(i).outcome);
  if (!entry.failure) return std::nullopt;
  return outcomes[i].failure_kind ? outcomes[i].failure_kind : entry.failure;
}

std::optional<FailureKind> FailureRule::note_of(std::size_t i) const {
  return vocab_entry(stage, outcomes.at(i).outcome).note;
}

double FailureRule::success_probability() const {
  double p = 0.0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!failure_of(i)) p += outcomes[i].probability;
  }
  return p;
}

RuleTable RuleTable::from_json(const json& doc, const std::vector<ObjectSpec>& reference_objects) {
  require_known_keys(doc, {"note", "version", "rules"}, "failure_rules");
  if (doc.value("version", 1) != 1) throw ParseError("failure_rules: unsupported version");
  std::vector<FailureRule> rules;
  for (const auto& r : doc.at("rules")) rules.push_back(parse_rule(r));
  for (std::size_t i = 0; i < rules.size(); ++i) {
    for (std::size_t k = i + 1; k < rules.size(); ++k) {
      if (rules[i].id == rules[k].id) throw ParseError("failure_rules: duplicate id " + rules[i].id);
    }
  }
  RuleTable table(std::move(rules));
  if (auto issues = table.completeness_issues(reference_objects); !issues.empty()) {
    throw ValidationError(std::move(issues));
  }
  return table;
}

RuleTable RuleTable::load(const std::filesystem::path& path,
                          const std::vector<ObjectSpec>& reference_objects) {
  return from_json(read_json_file(path), reference_objects);
}

const FailureRule& RuleTable::lookup(const ObjectSpec& obj, FingerType finger,
                                     SequenceStage stage) const {
  const FailureRule* found = nullptr;
  for (const auto& r : rules_) {
    if (!r.matches(obj, finger, stage)) continue;
    if (found) {
      throw StateError("rules " + found->id + " and " + r.id + " both match " + obj.name + "/" +
                       std::string(to_string(finger)) + "/" + std::string(to_string(stage)));
    }
    found = &r;
  }
  if (!found) {
    throw StateError("no rule for " + obj.name + "/" + std::string(to_string(finger)) + "/" +
                     std::string(to_string(stage)));
  }
  return *found;
}

std::vector<std::string> RuleTable::completeness_issues(
    const std::vector<ObjectSpec>& objects) const {
  std::vector<std::string> issues;
  for (const auto& obj : objects) {
    for (FingerType f : kFingerTypes) {
      for (SequenceStage s : kRuleStages) {
        int hits = 0;
        for (const auto& r : rules_) hits += r.matches(obj, f, s) ? 1 : 0;
        if (hits != 1) {
          issues.push_back((hits == 0 ? "gap: " : "overlap: ") + obj.name + "/" +
                           std::string(to_string(f)) + "/" + std::string(to_string(s)) + " has " +
                           std::to_string(hits) + " matching rules");
        }
      }
    }
  }
  return issues;
}

std::uint64_t DecisionKey::stream(std::string_view purpose) const {
  std::uint64_t h = fnv1a64(object);
  h = combine(h, static_cast<std::uint64_t>(finger));
  h = combine(h, static_cast<std::uint64_t>(stage));
  h = combine(h, static_cast<std::uint64_t>(attempt));
  return combine(h, fnv1a64(purpose));
}

double OutcomeChooser::uniform(const DecisionKey& key, std::string_view purpose) {
  return CounterRng(key.seed, key.stream(purpose)).uniform();
}

std::size_t SeededChooser::choose(const FailureRule& rule, const DecisionKey& key) {
  std::vector<double> weights;
  weights.reserve(rule.outcomes.size());
  for (const auto& o : rule.outcomes) weights.push_back(o.probability);
  return CounterRng(key.seed, key.stream("outcome")).categorical(weights);
}

std::size_t DeterministicChooser::choose(const FailureRule& rule, const DecisionKey&) {
  return rule.deterministic_index();
}

FeasibilityError::FeasibilityError(FeasibilityReport report)
    : Error("object cannot be grasped: " + std::string(to_string(report.reason))),
      report_(report) {}

World::World(GripperConfig cfg, FingerSet moulded, FingerSet printed, RuleTable rules)
    : cfg_(validate_config(cfg)),
      moulded_(std::move(moulded)),
      printed_(std::move(printed)),
      rules_(std::move(rules)) {
  if (moulded_.type != FingerType::moulded_oval || printed_.type != FingerType::printed) {
    throw ValidationError({"finger sets passed in the wrong order"});
  }
  if (auto c = convergence(moulded_, cfg_)) moulded_convergence_ = c->height;
  if (auto c = convergence(printed_, cfg_)) printed_convergence_ = c->height;
}

World World::load(const std::filesystem::path& dir) {
  const auto objects = load_objects(dir / "objects.json");
  return World(load_config(dir / "gripper_config.json"),
               load_finger_set(dir / "curves_moulded.json"),
               load_finger_set(dir / "curves_printed.json"),
               RuleTable::load(dir / "failure_rules.json", objects));
}

World World::load_default() { return load(data_dir()); }

const FingerSet& World::fingers(FingerType type) const {
  return type == FingerType::printed ? printed_ : moulded_;
}

std::optional<double> World::convergence_height(FingerType type) const {
  return type == FingerType::printed ? printed_convergence_ : moulded_convergence_;
}

FeasibilityReport World::feasibility(const ObjectSpec& obj, FingerType type) const {
  return grasp_feasible(obj, fingers(type), cfg_);
}

GraspResult World::grasp_attempt(const ObjectSpec& obj, FingerType finger,
                                 OutcomeChooser& chooser, const DecisionKey& key) const {
  GraspResult out;
  out.feasibility = feasibility(obj, finger);
  if (!out.feasibility.feasible) throw FeasibilityError(out.feasibility);
  const auto& rule = rules_.lookup(obj, finger, SequenceStage::grasp);
  const std::size_t i = chooser.choose(rule, key);
  out.outcome = enum_at<GraspOutcome>(kGraspVocab, rule.outcomes[i].outcome);
  out.failure = rule.failure_of(i);
  out.note = rule.note_of(i);
  return out;
}

HoldResult World::flip_hold_check(const ObjectSpec& obj, FingerType finger, SequenceStage stage,
                                  OutcomeChooser& chooser, const DecisionKey& key) const {
  if (stage != SequenceStage::flip_up && stage != SequenceStage::flip_down) {
    throw StateError("hold check only runs during a flip");
  }
  const auto& rule = rules_.lookup(obj, finger, stage);
  const std::size_t i = chooser.choose(rule, key);
  return HoldResult{enum_at<HoldOutcome>(kHoldVocab, rule.outcomes[i].outcome), rule.failure_of(i)};
}

DropResult World::drop_onto_palm(const GripperState& state, FingerType finger,
                                 OutcomeChooser& chooser, const DecisionKey& key) const {
  if (state.facing() != Facing::up) throw StateError("drop_onto_palm needs the gripper facing up");
  if (state.hold_mode() != HoldMode::in_fingers) {
    throw StateError("drop_onto_palm needs an object held in the fingers");
  }
  const ObjectSpec& obj = state.held()->object;
  const auto& rule = rules_.lookup(obj, finger, SequenceStage::drop_to_palm);
  const std::size_t i = chooser.choose(rule, key);

  DropResult out;
  out.outcome = enum_at<DropOutcome>(kDropVocab, rule.outcomes[i].outcome);
  out.failure = rule.failure_of(i);
  out.landing_yaw = state.held()->object_yaw;
  out.com_eccentricity = cfg_.com_eccentricity;
  switch (out.outcome) {
    case DropOutcome::centered:
      // Cloth that reaches the palm sags into the finger gaps.
      out.rotation_obstructed = obj.cloth_like;
      break;
    case DropOutcome::off_center:
      out.rotation_obstructed = obj.cloth_like;
      out.com_eccentricity = cfg_.off_center_eccentricity;
      break;
    case DropOutcome::tipped:
      out.rotation_obstructed = true;
      break;
    case DropOutcome::bounced:
    case DropOutcome::draped:
      out.on_palm = false;
      out.rotation_obstructed = true;
      break;
  }
  return out;
}

RegraspResult World::regrasp(const GripperState& state, FingerType finger,
                             OutcomeChooser& chooser, const DecisionKey& key) const {
  if (state.hold_mode() != HoldMode::on_palm) throw StateError("regrasp needs an object on the palm");
  const ObjectSpec& obj = state.held()->object;
  if (finger == FingerType::moulded_oval && !obj.cloth_like) {
    if (auto h = convergence_height(finger); h && obj.height < *h) {
      return {RegraspKind::converge_regrasp_fail, 0.0};
    }
  }
  if (obj.shape_class == ShapeClass::annulus &&
      obj.characteristic_width > 2.0 * cfg_.finger_mount_radius) {
    const double u = chooser.uniform(key, "regrasp_yaw");
    return {RegraspKind::displaced_on_regrasp,
            -kRegraspYawErrorBound + 2.0 * kRegraspYawErrorBound * u};
  }
  return {RegraspKind::ok, 0.0};
}

DropResult World::drop_onto_palm(const ObjectSpec& obj, FingerType finger,
                                 std::uint64_t seed) const {
  GripperState state(cfg_.servo_range);
  state.set_flip_angle(180.0);
  state.set_held(HeldObject{obj, HoldMode::in_fingers, 0.0, false, 0.0});
  SeededChooser chooser;
  return drop_onto_palm(state, finger, chooser,
                        DecisionKey{seed, obj.name, finger, SequenceStage::drop_to_palm, 0});
}

GraspResult World::grasp_attempt(const ObjectSpec& obj, FingerType finger,
                                 std::uint64_t seed) const {
  SeededChooser chooser;
  return grasp_attempt(obj, finger, chooser,
                       DecisionKey{seed, obj.name, finger, SequenceStage::grasp, 0});
}

HoldResult World::flip_hold_check(const ObjectSpec& obj, FingerType finger,
                                  std::uint64_t seed) const {
  SeededChooser chooser;
  return flip_hold_check(obj, finger, SequenceStage::flip_up, chooser,
                         DecisionKey{seed, obj.name, finger, SequenceStage::flip_up, 0});
}

}  // namespace palmgrip
