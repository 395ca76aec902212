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

// Batch runner for the object x finger-set study and its report formats.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "palmgrip/core_model.hpp"
#include "palmgrip/sequencer.hpp"
#include "palmgrip/sim_world.hpp"

namespace palmgrip {

enum class RunMode { deterministic, stochastic };
std::string_view to_string(RunMode m);
RunMode parse_run_mode(std::string_view s);  // "det"/"deterministic", "stoch"/"stochastic"

enum class ReportFormat { table, json, csv };
ReportFormat parse_report_format(std::string_view s);

inline constexpr int kDefaultRepetitions = 5;

struct SuiteConfig {
  RunMode mode = RunMode::deterministic;
  std::uint64_t seed = 0;  // ignored in deterministic mode
  int repetitions = kDefaultRepetitions;
  std::vector<ObjectSpec> objects;  // empty: the builtin set
  std::vector<FingerType> fingers{kFingerTypes.begin(), kFingerTypes.end()};
  double target_yaw = 180.0;
  double rotation_speed = 600.0;
  bool restart_on_failure = true;
  bool retry_before_advance = false;
  int jobs = 1;
};

/// Histogram over the nine pipeline stages, in pipeline order.
using StageHistogram = std::array<int, 9>;

struct PairReport {
  ObjectSpec object;
  FingerType finger_type = FingerType::printed;
  std::vector<TrialResult> trials;
  StageHistogram stage_failure_histogram{};
  int successes() const;
  double overall_success_rate() const;
};

struct ExperimentReport {
  RunMode mode = RunMode::deterministic;
  std::uint64_t seed = 0;
  int repetitions = 0;
  std::vector<PairReport> pairs;  // objects in input order, fingers inner
};

/// Seed handed to repetition `rep`; deterministic mode uses suite seed 0.
std::uint64_t trial_seed(std::uint64_t suite_seed, int rep);

SequencePlan suite_plan(const SuiteConfig& cfg, const ObjectSpec& obj, FingerType finger);

/// Throws ValidationError for repetitions < 1 or empty object/finger lists.
ExperimentReport run_suite(const World& world, const SuiteConfig& cfg);

/// Per-pair summary: enough for the CSV form and its round trip.
struct PairSummary {
  std::string object;
  double mass = 0.0;
  FingerType finger_type = FingerType::printed;
  int trials = 0;
  int successes = 0;
  StageHistogram stage_failures{};

  friend bool operator==(const PairSummary&, const PairSummary&) = default;
};

std::vector<PairSummary> summarize(const ExperimentReport& report);
std::string render_csv(const std::vector<PairSummary>& rows);
/// Inverse of render_csv. Throws ParseError.
std::vector<PairSummary> parse_csv(std::string_view text);

json report_json(const ExperimentReport& report);
/// Throws StateError for an empty report.
std::string render_report(const ExperimentReport& report, ReportFormat format);

/// Closed-form probability that a trial of `plan` succeeds, as the product
/// over stages of each stage's success probability under the rule table.
/// Geometric stages (rotation, re-grasp) contribute 0 or 1.
double analytic_success_probability(const World& world, const SequencePlan& plan);

/// Exact success probability by enumerating every outcome branch.
double enumerated_success_probability(const World& world, const SequencePlan& plan);

}  // namespace palmgrip
