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

// Transport-independent teleop session.
//
// One control-loop thread owns the simulated gripper. Clients submit decoded
// text; actuation commands go through a bounded FIFO and are applied one at
// a time, so concurrent submitters see the same result as sequential
// application in arrival order. pause, resume, cancel and release_operator
// act immediately and never wait behind queued work.
//
// Long commands (rotate_palm, flip, run_sequence) are precomputed into a
// timeline of states and played back against the wall clock, scaled by
// time_scale. Every state shown in telemetry is a valid GripperState.

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "palmgrip/protocol.hpp"
#include "palmgrip/sim_world.hpp"

namespace palmgrip {

struct TeleopConfig {
  double rate_hz = 30.0;            // telemetry, 1..120
  std::size_t queue_capacity = 64;  // pending actuation commands
  double time_scale = 1.0;          // simulated seconds per wall second
  FingerType finger_type = FingerType::printed;
  bool stochastic = false;          // run_sequence draws; otherwise deterministic outcomes
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> trace_path;
};

std::vector<std::string> teleop_config_issues(const TeleopConfig& cfg);

using ClientId = std::uint64_t;
using SendFn = std::function<void(std::string)>;

class TeleopCore {
 public:
  TeleopCore(World world, TeleopConfig cfg);
  ~TeleopCore();
  TeleopCore(const TeleopCore&) = delete;
  TeleopCore& operator=(const TeleopCore&) = delete;

  void start();
  void stop();

  /// Registers a client and sends it hello. `send` is called with the core's
  /// lock held and must not block or call back into the core.
  ClientId connect(SendFn send);
  void disconnect(ClientId id);

  /// Handles one text message. Returns false for a protocol violation the
  /// transport should answer by closing the connection.
  bool submit(ClientId id, std::string_view text);
  void submit(ClientId id, const Command& c);

  std::optional<Role> role(ClientId id) const;
  TelemetryFrame snapshot() const;
  std::size_t client_count() const;
  /// Blocks until the queue is empty and nothing is in flight.
  bool wait_idle(std::chrono::milliseconds timeout) const;

  const World& world() const { return world_; }
  const TeleopConfig& config() const { return cfg_; }

 private:
  struct Client {
    SendFn send;
    Role role = Role::observer;
  };
  struct Pending {
    ClientId client;
    Command command;
  };
  struct TimedState {
    double t = 0.0;
    GripperState state;
    std::optional<SequenceStage> stage;
    std::optional<StageEvent> event;
  };
  struct Activity {
    ClientId client = 0;
    std::int64_t id = 0;
    std::vector<TimedState> timeline;  // sorted by t
    std::size_t cursor = 0;
    double elapsed = 0.0;  // simulated seconds
    double duration = 0.0;
    json result;
  };

  void loop();
  void tick_locked(double dt_wall);
  void process_locked(const Pending& p);
  void finish_locked(Activity& a);
  void cancel_active_locked();
  void reply_locked(ClientId c, const Reply& r);
  void broadcast_frame_locked();
  void trace_locked(json entry);
  void promote_locked();
  std::int64_t now_ms_locked();
  StageEvent stage_event(const StageRecord& rec, const SequencePlan& plan) const;

  const World world_;
  const TeleopConfig cfg_;

  mutable std::mutex m_;
  mutable std::condition_variable cv_;
  mutable std::condition_variable idle_cv_;
  std::map<ClientId, Client> clients_;
  ClientId next_client_ = 1;
  std::deque<Pending> queue_;
  std::optional<Activity> active_;
  bool paused_ = false;
  bool cancel_pending_ = false;
  std::optional<Pending> cancel_request_;

  GripperState state_;
  SequenceStage stage_ = SequenceStage::idle;
  FingerType finger_type_;
  std::optional<StageEvent> last_event_;
  std::uint64_t sequence_runs_ = 0;

  std::chrono::steady_clock::time_point epoch_;
  std::int64_t last_ms_ = -1;
  std::ofstream trace_;

  bool running_ = false;
  std::thread thread_;
};

}  // namespace palmgrip
