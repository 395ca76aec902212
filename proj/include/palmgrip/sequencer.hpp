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

// Pick, flip, rotate-on-palm, re-grasp, place: the manipulation pipeline as
// an explicit stage machine.
//
// step() advances exactly one stage and never throws for world-level
// failures; those come back as a failed StageRecord with next = FAULT.
// run_trial() drives step() to completion and, when the plan asks for it,
// resumes after a fault at the start of the following stage from an
// idealised precondition state.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "palmgrip/core_model.hpp"
#include "palmgrip/json_io.hpp"
#include "palmgrip/palm_rotor.hpp"
#include "palmgrip/sim_world.hpp"

namespace palmgrip {

/// Servo positioning tolerance for in-hand rotation.
inline constexpr double kYawTolerance = 1.0;  // deg

struct SequencePlan {
  ObjectSpec object;
  FingerType finger_type = FingerType::printed;
  double target_yaw = 180.0;         // deg of object rotation from the grasp pose
  std::optional<double> grasp_u;     // default: the feasibility analysis
  double rotation_speed = 600.0;     // deg/s
  bool restart_on_failure = true;
  // Re-run a failed stage once from its precondition before moving on.
  bool retry_before_advance = false;

  friend bool operator==(const SequencePlan&, const SequencePlan&) = default;
};

std::vector<std::string> plan_issues(const SequencePlan& plan, const GripperConfig& cfg);
const SequencePlan& validate_plan(const SequencePlan& plan, const GripperConfig& cfg);

void to_json(json& j, const SequencePlan& p);
void from_json(const json& j, SequencePlan& p);

/// Intermediate state for animation, `t` seconds into the step.
struct Keyframe {
  double t = 0.0;
  GripperState state;
};

struct StepResult {
  SequenceStage next = SequenceStage::done;  // FAULT when the stage failed
  GripperState state;
  StageRecord record;
  double duration = 0.0;  // simulated seconds
  std::vector<Keyframe> frames;
  std::optional<RotationOutcome> rotation;
};

/// Palm angle at which `target_yaw` of rotation ends closest to centre and
/// inside the servo range. Throws RangeError if no start angle works.
double palm_park_angle(double target_yaw, const Interval& servo_range);

/// Gripper open, facing down, empty, vacuum off, palm parked for the plan.
GripperState initial_state(const World& world, const SequencePlan& plan);

/// The idealised state at the start of `stage`, used by the restart protocol.
GripperState precondition(const World& world, const SequencePlan& plan, SequenceStage stage);

/// Advances one stage. DONE is absorbing. Throws StateError when `state`
/// cannot be at `stage` (a caller bug, not a world outcome).
StepResult step(const World& world, const GripperState& state, SequenceStage stage,
                const SequencePlan& plan, OutcomeChooser& chooser, std::uint64_t seed,
                int attempt = 0, bool with_frames = false);

/// One row of the newline-delimited trace.
struct TraceEvent {
  SequenceStage stage = SequenceStage::idle;
  StageRecord record;
  bool restarted = false;  // stage began from the idealised precondition
  int attempt = 0;
  GripperState before;     // state the stage started from
  GripperState state;      // after the step
  double timestamp = 0.0;  // simulated seconds since the trial started
  std::vector<Keyframe> frames;  // only when run_trial is asked for them
};

json trace_event_json(const TraceEvent& e);

using TraceSink = std::function<void(const TraceEvent&)>;

struct TrialRun {
  TrialResult result;
  GripperState final_state;
  SequenceStage final_stage = SequenceStage::done;  // DONE or FAULT
  double duration = 0.0;
};

TrialRun run_trial(const World& world, const SequencePlan& plan, OutcomeChooser& chooser,
                   std::uint64_t seed, const TraceSink& sink = {}, bool with_frames = false);
/// Seeded draws.
TrialResult run_trial(const World& world, const SequencePlan& plan, std::uint64_t seed);

struct InHandResult {
  GripperState state;
  RotationOutcome rotation;
  bool blocked = false;  // slipped or obstructed: yaw did not follow the palm
};

/// Turns an object resting on the palm to `target_yaw`. Throws StateError
/// with nothing on the palm and RangeError when the palm would leave its range.
InHandResult rotate_in_hand(const World& world, double target_yaw, double speed,
                            const GripperState& state);

/// Depth-first enumeration of every outcome branch a trial can take.
/// Continuous draws are sampled at both ends and the middle of [0, 1).
class EnumeratingChooser : public OutcomeChooser {
 public:
  std::size_t choose(const FailureRule& rule, const DecisionKey& key) override;
  double uniform(const DecisionKey& key, std::string_view purpose) override;

  /// Prepares the next path; false once every path has been visited.
  bool next_path();
  /// Product of the branch probabilities along the current path.
  double path_probability() const { return probability_; }

 private:
  struct Branch {
    std::size_t index;
    std::size_t count;
  };
  std::size_t pick(std::size_t count);

  std::vector<Branch> path_;
  std::size_t depth_ = 0;
  bool started_ = false;
  double probability_ = 1.0;
};

inline constexpr std::array<double, 3> kEnumeratedUniforms = {0.0, 0.5, 0.999999};

}  // namespace palmgrip
