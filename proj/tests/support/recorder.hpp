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

// In-process teleop clients that record what the core sends them, plus the
// two-client flood check used by the unit and acceptance tests.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "palmgrip/teleop_core.hpp"

namespace palmgrip::oracle {

/// Replies from every client in the order the core emitted them.
struct ReplyLog {
  std::mutex m;
  std::vector<std::pair<ClientId, Reply>> replies;
};

class Recorder {
 public:
  explicit Recorder(ReplyLog* shared = nullptr) : shared_(shared) {}

  SendFn sink() {
    return [this](std::string msg) {
      const json j = json::parse(msg);
      std::lock_guard lock(m_);
      if (j.at("type") == "reply") {
        const Reply r = parse_reply(msg);
        replies_.push_back(r);
        if (shared_) {
          std::lock_guard g(shared_->m);
          shared_->replies.emplace_back(id_, r);
        }
      } else if (j.at("type") == "telemetry") {
        frames_.push_back(parse_telemetry(msg));
      } else {
        control_.push_back(j);
      }
      all_.push_back(j);
      cv_.notify_all();
    };
  }

  void attach(TeleopCore& core) { id_ = core.connect(sink()); }
  ClientId id() const { return id_; }

  /// Waits for a reply to `id` with `status`.
  std::optional<Reply> wait_reply(std::int64_t id, ReplyStatus status,
                                  std::chrono::milliseconds timeout = std::chrono::seconds(10)) {
    std::unique_lock lock(m_);
    std::optional<Reply> found;
    cv_.wait_for(lock, timeout, [&] {
      for (const auto& r : replies_) {
        if (r.id == id && (r.status == status || r.status == ReplyStatus::rejected)) {
          found = r;
          return true;
        }
      }
      return false;
    });
    return found;
  }

  template <typename Pred>
  bool wait_until(Pred pred, std::chrono::milliseconds timeout = std::chrono::seconds(10)) {
    std::unique_lock lock(m_);
    return cv_.wait_for(lock, timeout, [&] { return pred(*this); });
  }

  std::vector<Reply> replies() {
    std::lock_guard lock(m_);
    return replies_;
  }
  std::vector<TelemetryFrame> frames() {
    std::lock_guard lock(m_);
    return frames_;
  }
  std::vector<json> control() {
    std::lock_guard lock(m_);
    return control_;
  }
  std::vector<json> all() {
    std::lock_guard lock(m_);
    return all_;
  }

  // Unlocked views for wait_until predicates.
  const std::vector<Reply>& replies_unlocked() const { return replies_; }
  const std::vector<TelemetryFrame>& frames_unlocked() const { return frames_; }
  const std::vector<json>& control_unlocked() const { return control_; }

 private:
  ReplyLog* shared_;
  ClientId id_ = 0;
  std::mutex m_;
  std::condition_variable cv_;
  std::vector<Reply> replies_;
  std::vector<TelemetryFrame> frames_;
  std::vector<json> control_;
  std::vector<json> all_;
};

/// A random actuation command; some will be invalid for the state they meet.
inline CommandPayload random_actuation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (std::uniform_int_distribution<int>(0, 6)(rng)) {
    case 0: return cmd::SetFingers{unit(rng) < 0.3 ? 0.0 : unit(rng)};
    case 1: return cmd::RotatePalm{-150.0 + 300.0 * unit(rng), 700.0};
    case 2: return cmd::Vacuum{unit(rng) < 0.5};
    case 3: return cmd::Flip{unit(rng) < 0.5 ? Facing::up : Facing::down};
    case 4: return cmd::LoadObject{builtin_objects()[static_cast<std::size_t>(unit(rng) * 5)]};
    case 5: return cmd::Reset{};
    default: return cmd::SetFingers{1.0};
  }
}

struct FloodReport {
  int submitted = 0;
  int applied = 0;        // completed, in completion order
  int state_rejects = 0;  // invalid_state at dequeue
  int other_rejects = 0;  // not_operator, busy
  std::vector<std::string> problems;
};

/// Two clients flood one core from two threads. The first client hands the
/// operator role to the second half-way through. Afterwards the final state
/// must equal a sequential replay of the queued commands in the order the
/// core answered them, every command must get exactly one final answer, and
/// each client's queued commands must finish in its own submission order.
inline FloodReport flood_check(const World& world, int per_client, std::uint64_t seed) {
  FloodReport rep;
  TeleopConfig cfg;
  cfg.time_scale = 2000.0;
  cfg.queue_capacity = 1000;
  cfg.rate_hz = 120.0;
  ReplyLog log;
  TeleopCore core(world, cfg);
  core.start();
  Recorder a(&log), b(&log);
  a.attach(core);
  b.attach(core);

  std::vector<Command> sent_a, sent_b;
  std::atomic<bool> go{false};
  const auto flood = [&](Recorder& who, std::vector<Command>& sent, std::int64_t base, bool hand_over) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(base));
    while (!go) std::this_thread::yield();
    for (int i = 0; i < per_client; ++i) {
      Command c{base + i, random_actuation(rng)};
      if (hand_over && i == per_client / 2) c.payload = cmd::ReleaseOperator{};
      sent.push_back(c);
      core.submit(who.id(), c);
      if (i % 8 == 0) std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
  };
  std::thread ta(flood, std::ref(a), std::ref(sent_a), 1'000'000, true);
  std::thread tb(flood, std::ref(b), std::ref(sent_b), 2'000'000, false);
  go = true;
  ta.join();
  tb.join();
  if (!core.wait_idle(std::chrono::seconds(30))) rep.problems.push_back("core never went idle");
  const GripperState final_state = core.snapshot().state;
  core.stop();
  rep.submitted = static_cast<int>(sent_a.size() + sent_b.size());

  // Exactly one final answer per command; queued work finishes in submission order.
  std::map<std::int64_t, Command> by_id;
  for (const auto& c : sent_a) by_id[c.id] = c;
  for (const auto& c : sent_b) by_id[c.id] = c;
  std::map<std::int64_t, int> finals;
  std::vector<Command> applied_order;
  std::vector<ReplyStatus> applied_status;
  std::map<ClientId, std::int64_t> last_final;
  for (const auto& [client, r] : log.replies) {
    if (r.status == ReplyStatus::accepted) continue;
    ++finals[r.id];
    const Command& c = by_id.at(r.id);
    const bool queued = !std::holds_alternative<cmd::ReleaseOperator>(c.payload);
    // Admission rejects are answered at once; only queued work is FIFO.
    const bool dequeued = (r.status == ReplyStatus::completed && queued) || r.reason == reason::invalid_state;
    if (dequeued) {
      if (last_final.count(client) && r.id < last_final[client]) {
        rep.problems.push_back("client " + std::to_string(client) + " answered out of order");
      }
      last_final[client] = r.id;
    }
    if (r.status == ReplyStatus::completed && queued) {
      applied_order.push_back(c);
      applied_status.push_back(r.status);
      ++rep.applied;
    } else if (r.status == ReplyStatus::rejected && r.reason == reason::invalid_state) {
      applied_order.push_back(c);
      applied_status.push_back(r.status);
      ++rep.state_rejects;
    } else if (r.status == ReplyStatus::rejected) {
      ++rep.other_rejects;
    }
  }
  for (const auto& [id, c] : by_id) {
    if (finals[id] != 1) {
      rep.problems.push_back("command " + std::to_string(id) + " got " + std::to_string(finals[id]) +
                             " final answers");
    }
  }

  // Sequential replay on a fresh core, one command at a time.
  TeleopCore replay(world, cfg);
  replay.start();
  Recorder solo;
  solo.attach(replay);
  for (std::size_t i = 0; i < applied_order.size(); ++i) {
    replay.submit(solo.id(), applied_order[i]);
    const auto r = solo.wait_reply(applied_order[i].id, ReplyStatus::completed);
    if (!r || r->status != applied_status[i]) {
      rep.problems.push_back("replay diverged at command " + std::to_string(applied_order[i].id));
      break;
    }
  }
  replay.wait_idle(std::chrono::seconds(10));
  if (replay.snapshot().state != final_state) rep.problems.push_back("final state differs from replay");
  replay.stop();
  return rep;
}

}  // namespace palmgrip::oracle
