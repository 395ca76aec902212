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

#include "palmgrip/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <memory>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "palmgrip/rng.hpp"

namespace palmgrip {

namespace {

std::size_t stage_index(SequenceStage s) {
  const auto stages = pipeline_stages();
  const auto it = std::find(stages.begin(), stages.end(), s);
  if (it == stages.end()) throw StateError("not a pipeline stage");
  return static_cast<std::size_t>(it - stages.begin());
}

std::string mass_label(double mass) { return fmt::format("{:g} g", mass); }

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

template <typename T>
T parse_number(std::string_view s, std::string_view field) {
  T value{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw ParseError(fmt::format("csv: bad {} '{}'", field, s));
  }
  return value;
}

std::string csv_header() {
  std::string h = "object,mass_g,finger_type,trials,successes,success_rate";
  for (SequenceStage s : pipeline_stages()) h += fmt::format(",{}", to_string(s));
  return h;
}

}  // namespace

std::string_view to_string(RunMode m) {
  return m == RunMode::deterministic ? "deterministic" : "stochastic";
}

RunMode parse_run_mode(std::string_view s) {
  if (s == "det" || s == "deterministic") return RunMode::deterministic;
  if (s == "stoch" || s == "stochastic") return RunMode::stochastic;
  throw ParseError("unknown mode '" + std::string(s) + "'");
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "table") return ReportFormat::table;
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  throw ParseError("unknown format '" + std::string(s) + "'");
}

int PairReport::successes() const {
  return static_cast<int>(std::count_if(trials.begin(), trials.end(),
                                        [](const TrialResult& t) { return t.overall_success; }));
}

double PairReport::overall_success_rate() const {
  return trials.empty() ? 0.0 : static_cast<double>(successes()) / static_cast<double>(trials.size());
}

std::uint64_t trial_seed(std::uint64_t suite_seed, int rep) {
  return CounterRng(suite_seed, fnv1a64("trial")).at(static_cast<std::uint64_t>(rep));
}

SequencePlan suite_plan(const SuiteConfig& cfg, const ObjectSpec& obj, FingerType finger) {
  SequencePlan plan;
  plan.object = obj;
  plan.finger_type = finger;
  plan.target_yaw = cfg.target_yaw;
  plan.rotation_speed = cfg.rotation_speed;
  plan.restart_on_failure = cfg.restart_on_failure;
  plan.retry_before_advance = cfg.retry_before_advance;
  return plan;
}

ExperimentReport run_suite(const World& world, const SuiteConfig& cfg) {
  std::vector<std::string> issues;
  if (cfg.repetitions < 1) issues.emplace_back("repetitions must be >= 1");
  if (cfg.fingers.empty()) issues.emplace_back("no finger types selected");
  if (cfg.jobs < 1) issues.emplace_back("jobs must be >= 1");
  if (!issues.empty()) throw ValidationError(std::move(issues));

  const std::vector<ObjectSpec> objects = cfg.objects.empty() ? builtin_objects() : cfg.objects;
  const std::uint64_t suite_seed = cfg.mode == RunMode::deterministic ? 0 : cfg.seed;

  ExperimentReport report;
  report.mode = cfg.mode;
  report.seed = suite_seed;
  report.repetitions = cfg.repetitions;
  std::vector<SequencePlan> plans;
  for (const auto& obj : objects) {
    for (FingerType f : cfg.fingers) {
      plans.push_back(validate_plan(suite_plan(cfg, obj, f), world.config()));
      PairReport pair;
      pair.object = obj;
      pair.finger_type = f;
      pair.trials.resize(static_cast<std::size_t>(cfg.repetitions));
      report.pairs.push_back(std::move(pair));
    }
  }

  const std::size_t reps = static_cast<std::size_t>(cfg.repetitions);
  const std::size_t total = plans.size() * reps;
  std::atomic<std::size_t> cursor{0};
  const auto worker = [&] {
    std::unique_ptr<OutcomeChooser> chooser;
    if (cfg.mode == RunMode::deterministic) chooser = std::make_unique<DeterministicChooser>();
    else chooser = std::make_unique<SeededChooser>();
    for (std::size_t i = cursor++; i < total; i = cursor++) {
      const std::size_t p = i / reps;
      const int rep = static_cast<int>(i % reps);
      report.pairs[p].trials[i % reps] =
          run_trial(world, plans[p], *chooser, trial_seed(suite_seed, rep)).result;
    }
  };
  const int jobs = std::min<int>(cfg.jobs, static_cast<int>(std::max<std::size_t>(total, 1)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  for (auto& pair : report.pairs) {
    for (const auto& t : pair.trials) {
      for (const auto& rec : t.stage_outcomes) {
        if (rec.status == StageStatus::failed) ++pair.stage_failure_histogram[stage_index(rec.stage)];
      }
    }
  }
  return report;
}

std::vector<PairSummary> summarize(const ExperimentReport& report) {
  std::vector<PairSummary> out;
  for (const auto& p : report.pairs) {
    out.push_back(PairSummary{p.object.name, p.object.mass, p.finger_type,
                              static_cast<int>(p.trials.size()), p.successes(),
                              p.stage_failure_histogram});
  }
  return out;
}

std::string render_csv(const std::vector<PairSummary>& rows) {
  std::string out = csv_header() + "\n";
  for (const auto& r : rows) {
    const double rate = r.trials ? static_cast<double>(r.successes) / r.trials : 0.0;
    out += fmt::format("{},{:g},{},{},{},{:.4f}", r.object, r.mass, to_string(r.finger_type),
                       r.trials, r.successes, rate);
    for (int n : r.stage_failures) out += fmt::format(",{}", n);
    out += "\n";
  }
  return out;
}

std::vector<PairSummary> parse_csv(std::string_view text) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines.front() != csv_header()) throw ParseError("csv: unexpected header");
  std::vector<PairSummary> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i], ',');
    if (cells.size() != 6 + std::tuple_size_v<StageHistogram>) {
      throw ParseError(fmt::format("csv: line {} has {} cells", i + 1, cells.size()));
    }
    PairSummary r;
    r.object = std::string(cells[0]);
    r.mass = parse_number<double>(cells[1], "mass_g");
    r.finger_type = parse_finger_type(cells[2]);
    r.trials = parse_number<int>(cells[3], "trials");
    r.successes = parse_number<int>(cells[4], "successes");
    parse_number<double>(cells[5], "success_rate");  // derived, recomputed on render
    for (std::size_t k = 0; k < r.stage_failures.size(); ++k) {
      r.stage_failures[k] = parse_number<int>(cells[6 + k], "stage count");
    }
    if (r.successes < 0 || r.successes > r.trials) {
      throw ParseError(fmt::format("csv: line {} has more successes than trials", i + 1));
    }
    out.push_back(std::move(r));
  }
  return out;
}

json report_json(const ExperimentReport& report) {
  json pairs = json::array();
  for (const auto& p : report.pairs) {
    json hist = json::object();
    const auto stages = pipeline_stages();
    for (std::size_t i = 0; i < stages.size(); ++i) {
      hist[std::string(to_string(stages[i]))] = p.stage_failure_histogram[i];
    }
    pairs.push_back(json{{"object", p.object},
                         {"finger_type", to_string(p.finger_type)},
                         {"successes", p.successes()},
                         {"overall_success_rate", p.overall_success_rate()},
                         {"stage_failure_histogram", hist},
                         {"trials", p.trials}});
  }
  return json{{"mode", to_string(report.mode)},
              {"seed", report.seed},
              {"repetitions", report.repetitions},
              {"pairs", pairs}};
}

std::string render_report(const ExperimentReport& report, ReportFormat format) {
  if (report.pairs.empty() || report.repetitions < 1) {
    throw StateError("cannot render an empty report");
  }
  switch (format) {
    case ReportFormat::json:
      return report_json(report).dump(2) + "\n";
    case ReportFormat::csv:
      return render_csv(summarize(report));
    case ReportFormat::table:
      break;
  }

  // Objects across, finger sets down; cells are successes/trials.
  std::vector<const ObjectSpec*> objects;
  std::vector<FingerType> fingers;
  for (const auto& p : report.pairs) {
    if (std::none_of(objects.begin(), objects.end(),
                     [&](const ObjectSpec* o) { return o->name == p.object.name; })) {
      objects.push_back(&p.object);
    }
    if (std::find(fingers.begin(), fingers.end(), p.finger_type) == fingers.end()) {
      fingers.push_back(p.finger_type);
    }
  }
  const auto find_pair = [&](const std::string& name, FingerType f) -> const PairReport* {
    for (const auto& p : report.pairs) {
      if (p.object.name == name && p.finger_type == f) return &p;
    }
    return nullptr;
  };

  std::string out = fmt::format("success matrix ({}, {} repetitions)\n\n", to_string(report.mode),
                                report.repetitions);
  std::vector<std::string> header{"finger"};
  for (const auto* o : objects) header.push_back(fmt::format("{} ({})", o->name, mass_label(o->mass)));
  std::vector<std::vector<std::string>> rows{header};
  for (FingerType f : fingers) {
    std::vector<std::string> row{std::string(to_string(f))};
    for (const auto* o : objects) {
      const PairReport* p = find_pair(o->name, f);
      row.push_back(p ? fmt::format("{}/{}", p->successes(), p->trials.size()) : "-");
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      line += fmt::format("{:<{}}", row[i], width[i]);
      if (i + 1 < row.size()) line += "  ";
    }
    out += line + "\n";
  }

  out += "\nstage failures\n";
  for (const auto& p : report.pairs) {
    std::string detail;
    const auto stages = pipeline_stages();
    for (std::size_t i = 0; i < stages.size(); ++i) {
      if (p.stage_failure_histogram[i] == 0) continue;
      detail += fmt::format(" {}={}", to_string(stages[i]), p.stage_failure_histogram[i]);
    }
    out += fmt::format("  {} / {}:{}\n", p.object.name, to_string(p.finger_type),
                       detail.empty() ? " none" : detail);
  }
  return out;
}

double analytic_success_probability(const World& world, const SequencePlan& plan) {
  validate_plan(plan, world.config());
  if (!world.feasibility(plan.object, plan.finger_type).feasible) return 0.0;
  double p = 1.0;
  for (SequenceStage s : kRuleStages) {
    p *= world.rules().lookup(plan.object, plan.finger_type, s).success_probability();
  }
  // Geometric stages do not draw; run them once from their precondition.
  DeterministicChooser chooser;
  for (SequenceStage s : {SequenceStage::rotate_palm, SequenceStage::regrasp}) {
    const StepResult r = step(world, precondition(world, plan, s), s, plan, chooser, 0);
    if (r.record.status != StageStatus::ok) return 0.0;
  }
  return p;
}

double enumerated_success_probability(const World& world, const SequencePlan& plan) {
  EnumeratingChooser chooser;
  double p = 0.0;
  while (chooser.next_path()) {
    if (run_trial(world, plan, chooser, 0).result.overall_success) p += chooser.path_probability();
  }
  return p;
}

}  // namespace palmgrip
