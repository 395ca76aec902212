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

// Teleop wire protocol. One JSON object per WebSocket text frame.
//
// Client -> server, every command carries a client-chosen integer id:
//   {"id": 7, "type": "rotate_palm", "target_deg": 90, "speed_dps": 600}
//   set_fingers{u} rotate_palm{target_deg, speed_dps} vacuum{on}
//   flip{to: "up"|"down"} load_object{object} run_sequence{plan}
//   pause resume cancel reset release_operator
// Unknown keys on commands are rejected.
//
// Server -> client:
//   {"type": "hello", "role": "operator"|"observer", "rate_hz": 30}
//   {"type": "role", "role": ...}
//   {"type": "reply", "id": 7, "status": "accepted"|"rejected"|"completed", ...}
//   {"type": "telemetry", "timestamp_ms": ..., "stage": ..., "state": {...}, ...}
// Unknown keys on server messages are ignored by parsers.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "palmgrip/core_model.hpp"
#include "palmgrip/error.hpp"
#include "palmgrip/json_io.hpp"
#include "palmgrip/sequencer.hpp"

namespace palmgrip {

namespace cmd {
struct SetFingers {
  double u = 0.0;
  friend bool operator==(const SetFingers&, const SetFingers&) = default;
};
struct RotatePalm {
  double target_deg = 0.0;
  double speed_dps = 0.0;
  friend bool operator==(const RotatePalm&, const RotatePalm&) = default;
};
struct Vacuum {
  bool on = false;
  friend bool operator==(const Vacuum&, const Vacuum&) = default;
};
struct Flip {
  Facing to = Facing::up;
  friend bool operator==(const Flip&, const Flip&) = default;
};
struct LoadObject {
  ObjectSpec object;
  friend bool operator==(const LoadObject&, const LoadObject&) = default;
};
struct RunSequence {
  SequencePlan plan;
  friend bool operator==(const RunSequence&, const RunSequence&) = default;
};
struct Pause {
  friend bool operator==(const Pause&, const Pause&) = default;
};
struct Resume {
  friend bool operator==(const Resume&, const Resume&) = default;
};
struct Cancel {
  friend bool operator==(const Cancel&, const Cancel&) = default;
};
struct Reset {
  friend bool operator==(const Reset&, const Reset&) = default;
};
struct ReleaseOperator {
  friend bool operator==(const ReleaseOperator&, const ReleaseOperator&) = default;
};
}  // namespace cmd

using CommandPayload =
    std::variant<cmd::SetFingers, cmd::RotatePalm, cmd::Vacuum, cmd::Flip, cmd::LoadObject,
                 cmd::RunSequence, cmd::Pause, cmd::Resume, cmd::Cancel, cmd::Reset,
                 cmd::ReleaseOperator>;

struct Command {
  std::int64_t id = 0;
  CommandPayload payload;
  friend bool operator==(const Command&, const Command&) = default;
};

std::string_view command_type(const CommandPayload& p);

/// Rejection reasons on the wire.
namespace reason {
inline constexpr std::string_view malformed = "malformed";
inline constexpr std::string_view unknown_command = "unknown_command";
inline constexpr std::string_view invalid = "invalid";
inline constexpr std::string_view invalid_state = "invalid_state";
inline constexpr std::string_view busy = "busy";
inline constexpr std::string_view not_operator = "not_operator";
inline constexpr std::string_view nothing_in_flight = "nothing_in_flight";
inline constexpr std::string_view not_paused = "not_paused";
inline constexpr std::string_view already_paused = "already_paused";
}  // namespace reason

/// A command that cannot be decoded. `id` is set whenever the message had one.
class ProtocolError : public Error {
 public:
  ProtocolError(std::string_view reason, std::optional<std::int64_t> id,
                std::vector<std::string> details);
  const std::string& reason() const { return reason_; }
  const std::optional<std::int64_t>& id() const { return id_; }
  const std::vector<std::string>& details() const { return details_; }

 private:
  std::string reason_;
  std::optional<std::int64_t> id_;
  std::vector<std::string> details_;
};

json command_json(const Command& c);
std::string serialize(const Command& c);
/// Decodes and range-checks a command. Throws ProtocolError: malformed when
/// there is no usable id, unknown_command for a bad tag, invalid otherwise.
Command parse_command(std::string_view text);
Command command_from_json(const json& j);

/// Checks that do not depend on live state (ranges, object invariants).
std::vector<std::string> command_issues(const Command& c, const GripperConfig& cfg);

enum class ReplyStatus { accepted, rejected, completed };
std::string_view to_string(ReplyStatus s);

struct Reply {
  std::int64_t id = 0;
  ReplyStatus status = ReplyStatus::accepted;
  std::string reason;                // rejected only
  std::vector<std::string> details;  // rejected only
  json result;                       // completed only; null otherwise

  friend bool operator==(const Reply&, const Reply&) = default;
};

std::string serialize(const Reply& r);
Reply parse_reply(std::string_view text);

/// A stage outcome or failure surfaced to operators.
struct StageEvent {
  SequenceStage stage = SequenceStage::idle;
  StageStatus status = StageStatus::ok;
  std::optional<FailureKind> failure;
  std::string rule_id;      // empty for geometric failures
  std::string paper_quote;  // observation the rule encodes; may be empty

  friend bool operator==(const StageEvent&, const StageEvent&) = default;
};

struct TelemetryFrame {
  std::int64_t timestamp_ms = 0;
  GripperState state;
  SequenceStage stage = SequenceStage::idle;
  FingerType finger_type = FingerType::printed;
  bool paused = false;
  std::optional<StageEvent> last_event;

  friend bool operator==(const TelemetryFrame&, const TelemetryFrame&) = default;
};

json telemetry_json(const TelemetryFrame& f);
std::string serialize(const TelemetryFrame& f);
/// Lenient: unknown keys anywhere in the frame are ignored.
TelemetryFrame parse_telemetry(std::string_view text);

enum class Role { operator_, observer };
std::string_view to_string(Role r);

std::string hello_message(Role role, double rate_hz);
std::string role_message(Role role);

}  // namespace palmgrip
