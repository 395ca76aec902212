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

#include <cmath>

#include "palmgrip/sim_world.hpp"

using namespace palmgrip;

namespace {

const std::string kData = PALMGRIP_TEST_DATA_DIR;

const World& world() {
  static const World w = World::load(kData);
  return w;
}

json rules_doc() { return read_json_file(kData + "/failure_rules.json"); }

json& rule_by_id(json& doc, std::string_view id) {
  for (auto& r : doc["rules"]) {
    if (r["id"] == id) return r;
  }
  FAIL("no rule " << id);
  throw std::logic_error("unreachable");
}

GripperState facing_up_holding(const ObjectSpec& obj, HoldMode mode) {
  GripperState s;
  s.set_flip_angle(180);
  s.set_held(HeldObject{obj, mode});
  return s;
}

DecisionKey key_for(const ObjectSpec& obj, FingerType f, SequenceStage stage, std::uint64_t seed) {
  return DecisionKey{seed, obj.name, f, stage, 0};
}

// Fraction of seeds for which `pred` holds, over 10^5 seeds.
template <typename F>
double frequency(F pred) {
  constexpr int kN = 100000;
  int hits = 0;
  for (std::uint64_t s = 0; s < kN; ++s) hits += pred(s) ? 1 : 0;
  return hits / double(kN);
}

}  // namespace

TEST_CASE("shipped rule table is complete and every rule carries its observation") {
  const RuleTable& rules = world().rules();
  CHECK(rules.completeness_issues(builtin_objects()).empty());
  for (const auto& r : rules.rules()) {
    CAPTURE(r.id);
    CHECK_FALSE(r.paper_quote.empty());
    CHECK(is_rule_stage(r.stage));
    double total = 0;
    for (const auto& o : r.outcomes) total += o.probability;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (const auto& obj : builtin_objects()) {
    for (FingerType f : kFingerTypes) {
      for (SequenceStage s : kRuleStages) CHECK(rules.lookup(obj, f, s).matches(obj, f, s));
    }
  }
}

TEST_CASE("rule lookups resolve the expected rules") {
  const RuleTable& rules = world().rules();
  const auto tape = builtin_object("tape");
  CHECK(rules.lookup(tape, FingerType::moulded_oval, SequenceStage::drop_to_palm).id ==
        "drop-annulus-moulded-wide");
  ObjectSpec small_tape = tape;
  small_tape.characteristic_width = 59.9;
  CHECK(rules.lookup(small_tape, FingerType::moulded_oval, SequenceStage::drop_to_palm).id ==
        "drop-annulus-moulded-narrow");
  small_tape.characteristic_width = 60;  // min_width is inclusive
  CHECK(rules.lookup(small_tape, FingerType::moulded_oval, SequenceStage::drop_to_palm).id ==
        "drop-annulus-moulded-wide");
  CHECK_THROWS_AS(rules.lookup(tape, FingerType::printed, SequenceStage::rotate_palm), StateError);
}

TEST_CASE("gaps and overlaps are rejected at load") {
  json gap = rules_doc();
  auto& arr = gap["rules"];
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (arr[i]["id"] == "drop-sphere") {
      arr.erase(i);
      break;
    }
  }
  try {
    RuleTable::from_json(gap, builtin_objects());
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    REQUIRE(e.issues().size() == 2);  // tennis ball, both finger sets
    CHECK(e.issues()[0].rfind("gap: tennis_ball", 0) == 0);
  }

  json overlap = rules_doc();
  json extra = rule_by_id(overlap, "drop-sphere");
  extra["id"] = "drop-sphere-again";
  overlap["rules"].push_back(extra);
  CHECK_THROWS_AS(RuleTable::from_json(overlap, builtin_objects()), ValidationError);

  json dup = rules_doc();
  dup["rules"].push_back(rule_by_id(dup, "drop-sphere"));
  CHECK_THROWS_AS(RuleTable::from_json(dup, builtin_objects()), ParseError);
}

TEST_CASE("malformed rules") {
  auto with = [](auto mutate) {
    json doc = rules_doc();
    mutate(rule_by_id(doc, "drop-cloth"));
    return doc;
  };
  const auto objs = builtin_objects();
  CHECK_THROWS_AS(RuleTable::from_json(with([](json& r) { r["outcomes"][0]["probability"] = 0.6; }), objs),
                  ValidationError);
  CHECK_THROWS_AS(RuleTable::from_json(with([](json& r) { r["outcomes"][0]["probability"] = 1.7; }), objs),
                  ValidationError);
  CHECK_THROWS_AS(RuleTable::from_json(with([](json& r) { r["deterministic_outcome"] = "tipped"; }), objs),
                  ParseError);
  CHECK_THROWS_AS(RuleTable::from_json(with([](json& r) { r["outcomes"][0]["outcome"] = "held"; }), objs),
                  ParseError);
  CHECK_THROWS_AS(RuleTable::from_json(with([](json& r) { r["stage"] = "ROTATE_PALM"; }), objs),
                  ParseError);
  CHECK_THROWS_AS(RuleTable::from_json(with([](json& r) { r["colour"] = "red"; }), objs), ParseError);
  CHECK_THROWS_AS(
      RuleTable::from_json(with([](json& r) { r["outcomes"][1]["failure_kind"] = "tipped_on_drop"; }), objs),
      ParseError);
  json v2 = rules_doc();
  v2["version"] = 2;
  CHECK_THROWS_AS(RuleTable::from_json(v2, objs), ParseError);
}

TEST_CASE("failure kinds and notes per outcome") {
  const RuleTable& rules = world().rules();
  const auto& wide = rules.lookup(builtin_object("tape"), FingerType::moulded_oval, SequenceStage::drop_to_palm);
  CHECK(*wide.failure_of(0) == FailureKind::tipped_on_drop);
  CHECK(*wide.failure_of(1) == FailureKind::fell_between_fingers);  // overridden kind
  CHECK(wide.success_probability() == 0.0);
  const auto& egg = rules.lookup(builtin_object("styrofoam_egg"), FingerType::moulded_oval, SequenceStage::grasp);
  CHECK_FALSE(egg.failure_of(1).has_value());
  CHECK(*egg.note_of(1) == FailureKind::pushed_off_center);
  CHECK(egg.success_probability() == 1.0);
  const auto& cyl = rules.lookup(builtin_object("cylindrical_container"), FingerType::printed, SequenceStage::grasp);
  CHECK(*cyl.failure_of(1) == FailureKind::twisted_out);
  CHECK(cyl.success_probability() == 0.75);
}

TEST_CASE("seeded outcome frequencies follow the rule probabilities") {
  const World& w = world();
  const auto cyl = builtin_object("cylindrical_container");
  const auto egg = builtin_object("styrofoam_egg");
  const auto glove = builtin_object("glove");
  const auto tape = builtin_object("tape");
  SeededChooser c;

  const double twisted = frequency([&](std::uint64_t s) {
    return w.grasp_attempt(cyl, FingerType::printed, c, key_for(cyl, FingerType::printed, SequenceStage::grasp, s))
               .outcome == GraspOutcome::twisted_out;
  });
  CHECK(std::abs(twisted - 0.25) < 0.02);

  const double pushed = frequency([&](std::uint64_t s) {
    return w.grasp_attempt(egg, FingerType::moulded_oval, c,
                           key_for(egg, FingerType::moulded_oval, SequenceStage::grasp, s))
               .outcome == GraspOutcome::pushed_off_center;
  });
  CHECK(std::abs(pushed - 0.3) < 0.02);

  const double lost = frequency([&](std::uint64_t s) {
    return w.flip_hold_check(cyl, FingerType::moulded_oval, SequenceStage::flip_up, c,
                             key_for(cyl, FingerType::moulded_oval, SequenceStage::flip_up, s))
               .outcome == HoldOutcome::lost_grip_deform;
  });
  CHECK(std::abs(lost - 0.4) < 0.02);

  const GripperState glove_up = facing_up_holding(glove, HoldMode::in_fingers);
  const double draped = frequency([&](std::uint64_t s) {
    return w.drop_onto_palm(glove_up, FingerType::printed, c,
                            key_for(glove, FingerType::printed, SequenceStage::drop_to_palm, s))
               .outcome == DropOutcome::draped;
  });
  CHECK(std::abs(draped - 0.7) < 0.02);

  const GripperState tape_up = facing_up_holding(tape, HoldMode::in_fingers);
  const double bounced = frequency([&](std::uint64_t s) {
    return w.drop_onto_palm(tape_up, FingerType::moulded_oval, c,
                            key_for(tape, FingerType::moulded_oval, SequenceStage::drop_to_palm, s))
               .outcome == DropOutcome::bounced;
  });
  CHECK(std::abs(bounced - 0.5) < 0.02);
}

TEST_CASE("deterministic chooser takes the designated outcome") {
  const World& w = world();
  DeterministicChooser d;
  const auto glove = builtin_object("glove");
  const auto tape = builtin_object("tape");
  const auto cyl = builtin_object("cylindrical_container");
  const auto drop = w.drop_onto_palm(facing_up_holding(glove, HoldMode::in_fingers), FingerType::printed, d,
                                     key_for(glove, FingerType::printed, SequenceStage::drop_to_palm, 0));
  CHECK(drop.outcome == DropOutcome::draped);
  CHECK_FALSE(drop.on_palm);
  CHECK(drop.rotation_obstructed);
  CHECK(*drop.failure == FailureKind::draped_on_fingers);

  const auto tipped = w.drop_onto_palm(facing_up_holding(tape, HoldMode::in_fingers), FingerType::moulded_oval, d,
                                       key_for(tape, FingerType::moulded_oval, SequenceStage::drop_to_palm, 0));
  CHECK(tipped.outcome == DropOutcome::tipped);
  CHECK(*tipped.failure == FailureKind::tipped_on_drop);

  const auto hold = w.flip_hold_check(cyl, FingerType::moulded_oval, SequenceStage::flip_up, d,
                                      key_for(cyl, FingerType::moulded_oval, SequenceStage::flip_up, 0));
  CHECK(hold.outcome == HoldOutcome::lost_grip_deform);
  CHECK(*hold.failure == FailureKind::lost_grip_deform);

  const auto grasp = w.grasp_attempt(glove, FingerType::moulded_oval, d,
                                     key_for(glove, FingerType::moulded_oval, SequenceStage::grasp, 0));
  CHECK(grasp.outcome == GraspOutcome::pinch_then_ok);
  CHECK_FALSE(grasp.failure.has_value());
  CHECK(grasp.feasibility.pinch_required);
}

TEST_CASE("drop keeps the object's yaw and marks eccentric landings") {
  const World& w = world();
  const auto ball = builtin_object("tennis_ball");
  GripperState s = facing_up_holding(ball, HoldMode::in_fingers);
  s.set_object_yaw(12.5);
  DeterministicChooser d;
  const auto r = w.drop_onto_palm(s, FingerType::printed, d, key_for(ball, FingerType::printed, SequenceStage::drop_to_palm, 0));
  CHECK(r.on_palm);
  CHECK(r.landing_yaw == 12.5);
  CHECK_FALSE(r.rotation_obstructed);
  CHECK(r.com_eccentricity == w.config().com_eccentricity);

  // Off-centre landings carry the configured eccentricity.
  json doc = rules_doc();
  json& sphere = rule_by_id(doc, "drop-sphere");
  sphere["outcomes"] = json::array({{{"outcome", "off_center"}, {"probability", 1.0}}});
  sphere["deterministic_outcome"] = "off_center";
  const World off(w.config(), w.fingers(FingerType::moulded_oval), w.fingers(FingerType::printed),
                  RuleTable::from_json(doc, builtin_objects()));
  const auto o = off.drop_onto_palm(s, FingerType::printed, d, key_for(ball, FingerType::printed, SequenceStage::drop_to_palm, 0));
  CHECK(o.outcome == DropOutcome::off_center);
  CHECK(o.on_palm);
  CHECK(o.com_eccentricity == w.config().off_center_eccentricity);
  CHECK_FALSE(o.failure.has_value());
}

TEST_CASE("drop and regrasp state preconditions") {
  const World& w = world();
  DeterministicChooser d;
  const auto ball = builtin_object("tennis_ball");
  const DecisionKey k = key_for(ball, FingerType::printed, SequenceStage::drop_to_palm, 0);
  CHECK_THROWS_AS(w.drop_onto_palm(GripperState{}, FingerType::printed, d, k), StateError);
  GripperState down_holding;
  down_holding.set_held(HeldObject{ball, HoldMode::in_fingers});
  CHECK_THROWS_AS(w.drop_onto_palm(down_holding, FingerType::printed, d, k), StateError);
  CHECK_THROWS_AS(w.regrasp(facing_up_holding(ball, HoldMode::in_fingers), FingerType::printed, d, k),
                  StateError);
  CHECK_THROWS_AS(w.flip_hold_check(ball, FingerType::printed, SequenceStage::grasp, d, k), StateError);
}

TEST_CASE("regrasp geometry") {
  const World& w = world();
  SeededChooser c;
  const auto egg = builtin_object("styrofoam_egg");
  const auto ball = builtin_object("tennis_ball");
  const auto tape = builtin_object("tape");
  const auto conv = *w.convergence_height(FingerType::moulded_oval);
  REQUIRE(egg.height < conv);
  REQUIRE(ball.height > conv);

  auto rg = [&](const ObjectSpec& o, FingerType f, std::uint64_t seed) {
    return w.regrasp(facing_up_holding(o, HoldMode::on_palm), f, c,
                     key_for(o, f, SequenceStage::regrasp, seed));
  };
  // Moulded tips meet above a short object and cannot close around it.
  CHECK(rg(egg, FingerType::moulded_oval, 0).kind == RegraspKind::converge_regrasp_fail);
  CHECK(rg(egg, FingerType::printed, 0).kind == RegraspKind::ok);
  CHECK(rg(ball, FingerType::moulded_oval, 0).kind == RegraspKind::ok);
  // A wide ring is displaced by the closing fingers but stays within bounds.
  double lo = 1e9, hi = -1e9;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const auto r = rg(tape, FingerType::printed, s);
    REQUIRE(r.kind == RegraspKind::displaced_on_regrasp);
    lo = std::min(lo, r.yaw_error);
    hi = std::max(hi, r.yaw_error);
  }
  CHECK(lo >= -kRegraspYawErrorBound);
  CHECK(hi <= kRegraspYawErrorBound);
  CHECK(hi - lo > 25.0);
}

TEST_CASE("infeasible grasps throw with the report") {
  const World& w = world();
  ObjectSpec brick{"brick", 120, ShapeClass::cylinder, 50, 50, false, 0.5};
  try {
    w.grasp_attempt(brick, FingerType::printed, 1);
    FAIL("expected FeasibilityError");
  } catch (const FeasibilityError& e) {
    CHECK(e.report().reason == FeasibilityReason::mass_exceeds_capacity);
  }
}

TEST_CASE("world construction validates its inputs") {
  const World& w = world();
  CHECK_THROWS_AS(World(w.config(), w.fingers(FingerType::printed), w.fingers(FingerType::moulded_oval), w.rules()),
                  ValidationError);
  GripperConfig bad = w.config();
  bad.splay_angle = 95;
  CHECK_THROWS_AS(World(bad, w.fingers(FingerType::moulded_oval), w.fingers(FingerType::printed), w.rules()),
                  ValidationError);
}
