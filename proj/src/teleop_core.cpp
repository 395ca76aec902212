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

#include "palmgrip/teleop_core.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "palmgrip/palm_rotor.hpp"
#include "palmgrip/sequencer.hpp"

namespace palmgrip {

namespace {

constexpr auto kControlTick = std::chrono::milliseconds(5);
constexpr double kFrameStep = 0.02;  // s between timeline states for flips and rotations

Reply accepted(std::int64_t id) { return Reply{id, ReplyStatus::accepted, {}, {}, nullptr}; }

Reply completed(std::int64_t id, json result) {
  return Reply{id, ReplyStatus::completed, {}, {}, std::move(result)};
}

Reply rejected(std::int64_t id, std::string_view why, std::vector<std::string> details = {}) {
  return Reply{id, ReplyStatus::rejected, std::string(why), std::move(details), nullptr};
}

}  // namespace

std::vector<std::string> teleop_config_issues(const TeleopConfig& cfg) {
  std::vector<std::string> out;
  if (!(cfg.rate_hz >= 1.0 && cfg.rate_hz <= 120.0)) {
    out.push_back(fmt::format("rate_hz {} outside [1, 120]", cfg.rate_hz));
  }
  if (cfg.queue_capacity < 1) out.emplace_back("queue_capacity must be >= 1");
  if (!(cfg.time_scale > 0.0) || !std::isfinite(cfg.time_scale)) {
    out.emplace_back("time_scale must be positive");
  }
  return out;
}

TeleopCore::TeleopCore(World world, TeleopConfig cfg)
    : world_(std::move(world)),
      cfg_(std::move(cfg)),
      state_(world_.config().servo_range),
      finger_type_(cfg_.finger_type),
      epoch_(std::chrono::steady_clock::now()) {
  if (auto issues = teleop_config_issues(cfg_); !issues.empty()) {
    throw ValidationError(std::move(issues));
  }
  if (cfg_.trace_path) {
    trace_.open(*cfg_.trace_path, std::ios::out | std::ios::trunc);
    if (!trace_) throw Error("cannot open trace file " + cfg_.trace_path->string());
  }
}

TeleopCore::~TeleopCore() { stop(); }

void TeleopCore::start() {
  std::lock_guard lock(m_);
  if (running_) return;
  running_ = true;
  thread_ = std::thread([this] { loop(); });
}

void TeleopCore::stop() {
  {
    std::lock_guard lock(m_);
    if (!running_) return;
    running_ = false;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

ClientId TeleopCore::connect(SendFn send) {
  std::lock_guard lock(m_);
  const bool has_operator = std::any_of(clients_.begin(), clients_.end(), [](const auto& kv) {
    return kv.second.role == Role::operator_;
  });
  const ClientId id = next_client_++;
  Client& c = clients_[id];
  c.send = std::move(send);
  c.role = has_operator ? Role::observer : Role::operator_;
  try {
    c.send(hello_message(c.role, cfg_.rate_hz));
  } catch (...) {
  }
  trace_locked(json{{"kind", "connect"}, {"client", id}, {"role", to_string(c.role)}});
  return id;
}

void TeleopCore::disconnect(ClientId id) {
  std::lock_guard lock(m_);
  if (clients_.erase(id) == 0) return;
  trace_locked(json{{"kind", "disconnect"}, {"client", id}});
  promote_locked();
}

void TeleopCore::promote_locked() {
  const bool has_operator = std::any_of(clients_.begin(), clients_.end(), [](const auto& kv) {
    return kv.second.role == Role::operator_;
  });
  if (has_operator || clients_.empty()) return;
  auto& [id, c] = *clients_.begin();  // earliest remaining connection
  c.role = Role::operator_;
  try {
    c.send(role_message(c.role));
  } catch (...) {
  }
  trace_locked(json{{"kind", "role"}, {"client", id}, {"role", "operator"}});
}

std::optional<Role> TeleopCore::role(ClientId id) const {
  std::lock_guard lock(m_);
  const auto it = clients_.find(id);
  if (it == clients_.end()) return std::nullopt;
  return it->second.role;
}

std::size_t TeleopCore::client_count() const {
  std::lock_guard lock(m_);
  return clients_.size();
}

TelemetryFrame TeleopCore::snapshot() const {
  std::lock_guard lock(m_);
  return TelemetryFrame{last_ms_ < 0 ? 0 : last_ms_, state_, stage_, finger_type_, paused_,
                        last_event_};
}

bool TeleopCore::wait_idle(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(m_);
  return idle_cv_.wait_for(lock, timeout, [&] { return queue_.empty() && !active_; });
}

std::int64_t TeleopCore::now_ms_locked() {
  const auto real = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - epoch_)
                        .count();
  last_ms_ = std::max<std::int64_t>(real, last_ms_ + 1);
  return last_ms_;
}

void TeleopCore::trace_locked(json entry) {
  if (!trace_.is_open()) return;
  const auto real = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - epoch_)
                        .count();
  entry["t_ms"] = real;
  trace_ << entry.dump() << '\n';
  trace_.flush();
}

void TeleopCore::reply_locked(ClientId c, const Reply& r) {
  const std::string text = serialize(r);
  trace_locked(json{{"kind", "reply"}, {"client", c}, {"reply", json::parse(text)}});
  const auto it = clients_.find(c);
  if (it == clients_.end()) return;
  try {
    it->second.send(text);
  } catch (...) {
  }
}

bool TeleopCore::submit(ClientId id, std::string_view text) {
  Command c;
  try {
    c = parse_command(text);
  } catch (const ProtocolError& e) {
    std::lock_guard lock(m_);
    trace_locked(json{{"kind", "bad_message"}, {"client", id}, {"reason", e.reason()}});
    if (!e.id()) return false;
    reply_locked(id, rejected(*e.id(), e.reason(), e.details()));
    return true;
  }
  submit(id, c);
  return true;
}

void TeleopCore::submit(ClientId id, const Command& c) {
  std::lock_guard lock(m_);
  trace_locked(json{{"kind", "command"}, {"client", id}, {"command", command_json(c)}});
  const auto it = clients_.find(id);
  if (it == clients_.end()) return;
  if (it->second.role != Role::operator_) {
    reply_locked(id, rejected(c.id, reason::not_operator, {"observers cannot send commands"}));
    return;
  }
  if (auto issues = command_issues(c, world_.config()); !issues.empty()) {
    reply_locked(id, rejected(c.id, reason::invalid, std::move(issues)));
    return;
  }

  // Session controls skip the queue.
  if (std::holds_alternative<cmd::Pause>(c.payload)) {
    if (paused_) return reply_locked(id, rejected(c.id, reason::already_paused));
    paused_ = true;
    reply_locked(id, accepted(c.id));
    reply_locked(id, completed(c.id, json{{"paused", true}}));
    return;
  }
  if (std::holds_alternative<cmd::Resume>(c.payload)) {
    if (!paused_) return reply_locked(id, rejected(c.id, reason::not_paused));
    paused_ = false;
    reply_locked(id, accepted(c.id));
    reply_locked(id, completed(c.id, json{{"paused", false}}));
    cv_.notify_all();
    return;
  }
  if (std::holds_alternative<cmd::Cancel>(c.payload)) {
    if (!active_ || cancel_pending_) return reply_locked(id, rejected(c.id, reason::nothing_in_flight));
    cancel_pending_ = true;
    cancel_request_ = Pending{id, c};
    reply_locked(id, accepted(c.id));
    cv_.notify_all();
    return;
  }
  if (std::holds_alternative<cmd::ReleaseOperator>(c.payload)) {
    reply_locked(id, accepted(c.id));
    it->second.role = Role::observer;
    // Hand over to the earliest other client, if any.
    for (auto& [other, client] : clients_) {
      if (other == id) continue;
      client.role = Role::operator_;
      try {
        client.send(role_message(client.role));
      } catch (...) {
      }
      break;
    }
    reply_locked(id, completed(c.id, json{{"role", "observer"}}));
    try {
      it->second.send(role_message(Role::observer));
    } catch (...) {
    }
    return;
  }

  if (queue_.size() >= cfg_.queue_capacity) {
    reply_locked(id, rejected(c.id, reason::busy, {"command queue is full"}));
    return;
  }
  queue_.push_back(Pending{id, c});
  cv_.notify_all();
}

StageEvent TeleopCore::stage_event(const StageRecord& rec, const SequencePlan& plan) const {
  StageEvent e{rec.stage, rec.status, rec.failure_detail, {}, {}};
  if (rec.status == StageStatus::failed && is_rule_stage(rec.stage)) {
    try {
      const FailureRule& rule = world_.rules().lookup(plan.object, plan.finger_type, rec.stage);
      e.rule_id = rule.id;
      e.paper_quote = rule.paper_quote;
    } catch (const StateError&) {
    }
  }
  return e;
}

void TeleopCore::process_locked(const Pending& p) {
  const Command& c = p.command;
  const GripperConfig& cfg = world_.config();
  const FingerSet& set = world_.fingers(finger_type_);
  const auto invalid_state = [&](std::string why) {
    reply_locked(p.client, rejected(c.id, reason::invalid_state, {std::move(why)}));
  };

  Activity a;
  a.client = p.client;
  a.id = c.id;
  GripperState s = state_;
  json result;

  try {
    if (const auto* f = std::get_if<cmd::SetFingers>(&c.payload)) {
      s.set_fingers(f->u, bend_angles(f->u, set.calibration, set.curves));
      if (s.hold_mode() == HoldMode::in_fingers && f->u == 0.0) {
        // Opening releases: onto the palm when facing up, onto the table otherwise.
        if (s.facing() == Facing::up) {
          HeldObject h = *s.held();
          h.hold_mode = HoldMode::on_palm;
          h.rotation_obstructed = h.object.cloth_like;
          s.set_held(h);
        } else {
          s.set_held(std::nullopt);
        }
      } else if (s.hold_mode() == HoldMode::on_palm) {
        const auto feas = world_.feasibility(s.held()->object, finger_type_);
        if (feas.grasp_u && f->u >= *feas.grasp_u) {
          HeldObject h = *s.held();
          h.hold_mode = HoldMode::in_fingers;
          h.rotation_obstructed = false;
          s.set_held(h);
        }
      }
      result = json{{"finger_command", s.finger_command()}, {"finger_bends", s.finger_bends()}};
    } else if (const auto* r = std::get_if<cmd::RotatePalm>(&c.payload)) {
      const RotationOutcome out =
          rotate_to(RotationCommand{r->target_deg, r->speed_dps, cfg.palm_accel}, s, palm_load(s),
                    world_.slip_model(), cfg.max_palm_speed);
      const auto stride = static_cast<std::size_t>(std::lround(kFrameStep / kPalmStep));
      for (std::size_t i = stride; i + 1 < out.samples.size(); i += stride) {
        GripperState f = s;
        f.set_palm(out.samples[i].palm_angle, out.samples[i].palm_velocity);
        if (f.hold_mode() == HoldMode::on_palm) f.set_object_yaw(out.samples[i].object_yaw);
        a.timeline.push_back({out.samples[i].t, std::move(f), std::nullopt, std::nullopt});
      }
      const double yaw0 = s.held() ? s.held()->object_yaw : 0.0;
      s.set_palm(out.final_angle, 0.0);
      if (s.hold_mode() == HoldMode::on_palm) s.set_object_yaw(yaw0 + out.object_yaw_change);
      a.duration = out.duration;
      result = json{{"final_angle", out.final_angle},
                    {"slipped", out.slipped},
                    {"slip_angle_error", out.slip_angle_error},
                    {"object_yaw_change", out.object_yaw_change},
                    {"duration_s", out.duration},
                    {"torque_required", out.torque_required},
                    {"torque_available", out.torque_available}};
    } else if (const auto* v = std::get_if<cmd::Vacuum>(&c.payload)) {
      s.set_vacuum(v->on);
      result = json{{"vacuum_on", v->on}};
    } else if (const auto* fl = std::get_if<cmd::Flip>(&c.payload)) {
      const double from = s.flip_angle();
      const double to = fl->to == Facing::up ? 180.0 : 0.0;
      if (fl->to == Facing::down && s.hold_mode() == HoldMode::on_palm) {
        return invalid_state("cannot turn face down with an object on the palm");
      }
      a.duration = cfg.flip_duration * std::abs(to - from) / 180.0;
      const int n = static_cast<int>(std::ceil(a.duration / kFrameStep));
      for (int i = 1; i < n; ++i) {
        GripperState f = s;
        f.set_flip_angle(from + (to - from) * i / n);
        a.timeline.push_back({a.duration * i / n, std::move(f), std::nullopt, std::nullopt});
      }
      s.set_flip_angle(to);
      result = json{{"gripper_facing", to_string(s.facing())}};
    } else if (const auto* lo = std::get_if<cmd::LoadObject>(&c.payload)) {
      if (s.held()) return invalid_state("an object is already loaded");
      const bool up = s.facing() == Facing::up;
      s.set_held(HeldObject{lo->object, up ? HoldMode::on_palm : HoldMode::in_fingers, 0.0,
                            up && lo->object.cloth_like, cfg.com_eccentricity});
      result = json{{"hold_mode", to_string(s.hold_mode())}};
    } else if (const auto* rs = std::get_if<cmd::RunSequence>(&c.payload)) {
      if (s.held()) return invalid_state("unload the gripper before running a sequence");
      const SequencePlan& plan = rs->plan;
      SeededChooser seeded;
      DeterministicChooser fixed;
      OutcomeChooser& chooser =
          cfg_.stochastic ? static_cast<OutcomeChooser&>(seeded) : static_cast<OutcomeChooser&>(fixed);
      const std::uint64_t seed = cfg_.seed + sequence_runs_++;
      double start = 0.0;
      a.timeline.push_back({0.0, initial_state(world_, plan), SequenceStage::approach, std::nullopt});
      const TrialRun run = run_trial(
          world_, plan, chooser, seed,
          [&](const TraceEvent& e) {
            a.timeline.push_back({start, e.before, e.stage, std::nullopt});
            for (const Keyframe& k : e.frames) {
              a.timeline.push_back({start + k.t, k.state, std::nullopt, std::nullopt});
            }
            a.timeline.push_back({e.timestamp, e.state, std::nullopt, stage_event(e.record, plan)});
            start = e.timestamp;
          },
          true);
      a.duration = run.duration;
      a.timeline.push_back({run.duration, run.final_state, run.final_stage, std::nullopt});
      s = run.final_state;
      result = run.result;
      finger_type_ = plan.finger_type;
    } else if (std::holds_alternative<cmd::Reset>(c.payload)) {
      s = GripperState(cfg.servo_range);
      stage_ = SequenceStage::idle;
      last_event_.reset();
      finger_type_ = cfg_.finger_type;
      result = json{{"reset", true}};
    }
  } catch (const Error& e) {
    // State untouched: `s` was a scratch copy.
    return invalid_state(e.what());
  }

  reply_locked(p.client, accepted(c.id));
  a.timeline.push_back({a.duration, s, std::nullopt, std::nullopt});
  a.result = std::move(result);
  active_ = std::move(a);
  tick_locked(0.0);  // instantaneous commands complete in this tick
}

void TeleopCore::finish_locked(Activity& a) {
  state_.set_palm(state_.palm_angle(), 0.0);
  reply_locked(a.client, completed(a.id, a.result));
}

void TeleopCore::cancel_active_locked() {
  if (!active_) return;
  state_.set_palm(state_.palm_angle(), 0.0);  // servo stops where it is
  json result = json{{"cancelled", true}};
  reply_locked(active_->client, completed(active_->id, result));
  active_.reset();
}

void TeleopCore::tick_locked(double dt_wall) {
  if (cancel_pending_) {
    cancel_pending_ = false;
    cancel_active_locked();
    if (cancel_request_) {
      reply_locked(cancel_request_->client,
                   completed(cancel_request_->command.id, json{{"cancelled", true}}));
      cancel_request_.reset();
    }
  }
  if (!active_ || paused_) return;
  Activity& a = *active_;
  a.elapsed += dt_wall * cfg_.time_scale;
  const bool done = a.elapsed >= a.duration;
  while (a.cursor < a.timeline.size() && (done || a.timeline[a.cursor].t <= a.elapsed)) {
    const TimedState& ts = a.timeline[a.cursor++];
    state_ = ts.state;
    if (ts.stage) stage_ = *ts.stage;
    if (ts.event) {
      last_event_ = ts.event;
      const StageEvent& e = *ts.event;
      trace_locked(json{{"kind", "event"},
                        {"stage", to_string(e.stage)},
                        {"outcome", to_string(e.status)},
                        {"failure_detail", e.failure ? json(to_string(*e.failure)) : json(nullptr)},
                        {"rule_id", e.rule_id}});
    }
  }
  if (done) {
    finish_locked(a);
    active_.reset();
  }
}

void TeleopCore::broadcast_frame_locked() {
  TelemetryFrame f{now_ms_locked(), state_, stage_, finger_type_, paused_, last_event_};
  const std::string text = serialize(f);
  for (auto& [id, c] : clients_) {
    try {
      c.send(text);
    } catch (...) {
    }
  }
}

void TeleopCore::loop() {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(1.0 / cfg_.rate_hz));
  auto last = clock::now();
  auto next_frame = last + period;
  std::unique_lock lock(m_);
  while (running_) {
    const auto now = clock::now();
    const double dt = std::chrono::duration<double>(now - last).count();
    last = now;
    tick_locked(dt);
    while (!active_ && !paused_ && !queue_.empty()) {
      const Pending p = std::move(queue_.front());
      queue_.pop_front();
      process_locked(p);
    }
    if (now >= next_frame) {
      broadcast_frame_locked();
      next_frame += period;
      if (next_frame <= now) next_frame = now + period;  // no catch-up bursts
    }
    if (queue_.empty() && !active_) idle_cv_.notify_all();
    const auto wake = active_ ? std::min(next_frame, now + kControlTick) : next_frame;
    cv_.wait_until(lock, wake);
  }
}

}  // namespace palmgrip
