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

#include "palmgrip/protocol.hpp"

#include <cmath>

#include <fmt/format.h>

namespace palmgrip {

namespace {

template <typename T>
constexpr std::string_view kTag = "";
template <> constexpr std::string_view kTag<cmd::SetFingers> = "set_fingers";
template <> constexpr std::string_view kTag<cmd::RotatePalm> = "rotate_palm";
template <> constexpr std::string_view kTag<cmd::Vacuum> = "vacuum";
template <> constexpr std::string_view kTag<cmd::Flip> = "flip";
template <> constexpr std::string_view kTag<cmd::LoadObject> = "load_object";
template <> constexpr std::string_view kTag<cmd::RunSequence> = "run_sequence";
template <> constexpr std::string_view kTag<cmd::Pause> = "pause";
template <> constexpr std::string_view kTag<cmd::Resume> = "resume";
template <> constexpr std::string_view kTag<cmd::Cancel> = "cancel";
template <> constexpr std::string_view kTag<cmd::Reset> = "reset";
template <> constexpr std::string_view kTag<cmd::ReleaseOperator> = "release_operator";

template <typename T>
double number(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ParseError(fmt::format("{} must be a number", key));
  return v.get<T>();
}

bool boolean(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_boolean()) throw ParseError(fmt::format("{} must be a boolean", key));
  return v.get<bool>();
}

// Keeps only `keys`; used for lenient parsing of server messages.
json pick(const json& j, std::initializer_list<const char*> keys) {
  json out = json::object();
  for (const char* k : keys) {
    if (j.contains(k)) out[k] = j.at(k);
  }
  return out;
}

json lenient_object(const json& j) {
  return pick(j, {"name", "mass", "shape_class", "characteristic_width", "height", "cloth_like",
                  "com_height_frac"});
}

json lenient_state(const json& j) {
  json s = pick(j, {"servo_range", "palm_angle", "palm_velocity", "finger_command",
                    "finger_bends", "vacuum_on", "gripper_facing", "flip_angle", "held_object"});
  if (s.contains("held_object") && s["held_object"].is_object()) {
    json h = pick(s["held_object"], {"object", "hold_mode", "object_yaw", "rotation_obstructed",
                                     "com_eccentricity"});
    if (h.contains("object")) h["object"] = lenient_object(h["object"]);
    s["held_object"] = h;
  }
  return s;
}

}  // namespace

ProtocolError::ProtocolError(std::string_view reason, std::optional<std::int64_t> id,
                             std::vector<std::string> details)
    : Error(fmt::format("{}: {}", reason, details.empty() ? std::string() : details.front())),
      reason_(reason),
      id_(id),
      details_(std::move(details)) {}

std::string_view command_type(const CommandPayload& p) {
  return std::visit([](const auto& c) { return kTag<std::decay_t<decltype(c)>>; }, p);
}

json command_json(const Command& c) {
  json j{{"id", c.id}, {"type", command_type(c.payload)}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, cmd::SetFingers>) {
          j["u"] = p.u;
        } else if constexpr (std::is_same_v<T, cmd::RotatePalm>) {
          j["target_deg"] = p.target_deg;
          j["speed_dps"] = p.speed_dps;
        } else if constexpr (std::is_same_v<T, cmd::Vacuum>) {
          j["on"] = p.on;
        } else if constexpr (std::is_same_v<T, cmd::Flip>) {
          j["to"] = to_string(p.to);
        } else if constexpr (std::is_same_v<T, cmd::LoadObject>) {
          j["object"] = p.object;
        } else if constexpr (std::is_same_v<T, cmd::RunSequence>) {
          j["plan"] = p.plan;
        }
      },
      c.payload);
  return j;
}

std::string serialize(const Command& c) { return command_json(c).dump(); }

Command command_from_json(const json& j) {
  if (!j.is_object()) throw ProtocolError(reason::malformed, std::nullopt, {"expected an object"});
  if (!j.contains("id") || !j.at("id").is_number_integer()) {
    throw ProtocolError(reason::malformed, std::nullopt, {"missing integer id"});
  }
  Command c;
  c.id = j.at("id").get<std::int64_t>();
  if (!j.contains("type") || !j.at("type").is_string()) {
    throw ProtocolError(reason::invalid, c.id, {"missing string type"});
  }
  const std::string type = j.at("type").get<std::string>();
  try {
    const auto keys = [&](std::initializer_list<std::string_view> extra) {
      std::vector<std::string_view> allowed{"id", "type"};
      allowed.insert(allowed.end(), extra.begin(), extra.end());
      for (const auto& [k, v] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
          throw ParseError(fmt::format("unknown key '{}'", k));
        }
      }
    };
    if (type == kTag<cmd::SetFingers>) {
      keys({"u"});
      c.payload = cmd::SetFingers{number<double>(j, "u")};
    } else if (type == kTag<cmd::RotatePalm>) {
      keys({"target_deg", "speed_dps"});
      c.payload = cmd::RotatePalm{number<double>(j, "target_deg"), number<double>(j, "speed_dps")};
    } else if (type == kTag<cmd::Vacuum>) {
      keys({"on"});
      c.payload = cmd::Vacuum{boolean(j, "on")};
    } else if (type == kTag<cmd::Flip>) {
      keys({"to"});
      c.payload = cmd::Flip{parse_facing(j.at("to").get<std::string>())};
    } else if (type == kTag<cmd::LoadObject>) {
      keys({"object"});
      c.payload = cmd::LoadObject{j.at("object").get<ObjectSpec>()};
    } else if (type == kTag<cmd::RunSequence>) {
      keys({"plan"});
      c.payload = cmd::RunSequence{j.at("plan").get<SequencePlan>()};
    } else if (type == kTag<cmd::Pause>) {
      keys({});
      c.payload = cmd::Pause{};
    } else if (type == kTag<cmd::Resume>) {
      keys({});
      c.payload = cmd::Resume{};
    } else if (type == kTag<cmd::Cancel>) {
      keys({});
      c.payload = cmd::Cancel{};
    } else if (type == kTag<cmd::Reset>) {
      keys({});
      c.payload = cmd::Reset{};
    } else if (type == kTag<cmd::ReleaseOperator>) {
      keys({});
      c.payload = cmd::ReleaseOperator{};
    } else {
      throw ProtocolError(reason::unknown_command, c.id, {"unknown type '" + type + "'"});
    }
  } catch (const ProtocolError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ProtocolError(reason::invalid, c.id, e.issues());
  } catch (const std::exception& e) {
    throw ProtocolError(reason::invalid, c.id, {e.what()});
  }
  return c;
}

Command parse_command(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProtocolError(reason::malformed, std::nullopt, {e.what()});
  }
  return command_from_json(j);
}

std::vector<std::string> command_issues(const Command& c, const GripperConfig& cfg) {
  std::vector<std::string> out;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, cmd::SetFingers>) {
          if (!(p.u >= 0.0 && p.u <= 1.0)) out.push_back(fmt::format("u {} outside [0, 1]", p.u));
        } else if constexpr (std::is_same_v<T, cmd::RotatePalm>) {
          if (!cfg.servo_range.contains(p.target_deg)) {
            out.push_back(fmt::format("target_deg {} outside servo_range [{}, {}]", p.target_deg,
                                      cfg.servo_range.lo, cfg.servo_range.hi));
          }
          if (!(p.speed_dps > 0.0 && p.speed_dps <= cfg.max_palm_speed)) {
            out.push_back(
                fmt::format("speed_dps {} outside (0, {}]", p.speed_dps, cfg.max_palm_speed));
          }
        } else if constexpr (std::is_same_v<T, cmd::LoadObject>) {
          for (auto& s : object_issues(p.object)) out.push_back("object: " + s);
        } else if constexpr (std::is_same_v<T, cmd::RunSequence>) {
          for (auto& s : plan_issues(p.plan, cfg)) out.push_back("plan: " + s);
        }
      },
      c.payload);
  return out;
}

std::string_view to_string(ReplyStatus s) {
  switch (s) {
    case ReplyStatus::accepted: return "accepted";
    case ReplyStatus::rejected: return "rejected";
    case ReplyStatus::completed: return "completed";
  }
  return "?";
}

std::string serialize(const Reply& r) {
  json j{{"type", "reply"}, {"id", r.id}, {"status", to_string(r.status)}};
  if (r.status == ReplyStatus::rejected) {
    j["reason"] = r.reason;
    j["details"] = r.details;
  }
  if (r.status == ReplyStatus::completed) j["result"] = r.result;
  return j.dump();
}

Reply parse_reply(std::string_view text) {
  const json j = json::parse(text);
  if (j.value("type", "") != "reply") throw ParseError("not a reply");
  Reply r;
  r.id = j.at("id").get<std::int64_t>();
  const std::string status = j.at("status").get<std::string>();
  if (status == "accepted") r.status = ReplyStatus::accepted;
  else if (status == "rejected") r.status = ReplyStatus::rejected;
  else if (status == "completed") r.status = ReplyStatus::completed;
  else throw ParseError("unknown reply status '" + status + "'");
  if (r.status == ReplyStatus::rejected) {
    r.reason = j.value("reason", "");
    r.details = j.value("details", std::vector<std::string>{});
  }
  if (r.status == ReplyStatus::completed && j.contains("result")) r.result = j.at("result");
  return r;
}

json telemetry_json(const TelemetryFrame& f) {
  json j{{"type", "telemetry"},
         {"timestamp_ms", f.timestamp_ms},
         {"stage", to_string(f.stage)},
         {"finger_type", to_string(f.finger_type)},
         {"paused", f.paused},
         {"state", f.state}};
  if (f.last_event) {
    const StageEvent& e = *f.last_event;
    j["last_event"] = json{
        {"stage", to_string(e.stage)},
        {"outcome", to_string(e.status)},
        {"failure_detail", e.failure ? json(to_string(*e.failure)) : json(nullptr)},
        {"rule_id", e.rule_id},
        {"paper_quote", e.paper_quote}};
  } else {
    j["last_event"] = nullptr;
  }
  return j;
}

std::string serialize(const TelemetryFrame& f) { return telemetry_json(f).dump(); }

TelemetryFrame parse_telemetry(std::string_view text) {
  const json j = json::parse(text);
  if (j.value("type", "") != "telemetry") throw ParseError("not a telemetry frame");
  TelemetryFrame f;
  f.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
  f.stage = parse_stage(j.at("stage").get<std::string>());
  f.finger_type = parse_finger_type(j.value("finger_type", "printed"));
  f.paused = j.value("paused", false);
  f.state = lenient_state(j.at("state")).get<GripperState>();
  if (j.contains("last_event") && j.at("last_event").is_object()) {
    const json& e = j.at("last_event");
    StageEvent ev;
    ev.stage = parse_stage(e.at("stage").get<std::string>());
    ev.status = parse_stage_status(e.at("outcome").get<std::string>());
    if (e.contains("failure_detail") && !e.at("failure_detail").is_null()) {
      ev.failure = parse_failure_kind(e.at("failure_detail").get<std::string>());
    }
    ev.rule_id = e.value("rule_id", "");
    ev.paper_quote = e.value("paper_quote", "");
    f.last_event = ev;
  }
  return f;
}

std::string_view to_string(Role r) { return r == Role::operator_ ? "operator" : "observer"; }

std::string hello_message(Role role, double rate_hz) {
  return json{{"type", "hello"}, {"role", to_string(role)}, {"rate_hz", rate_hz}}.dump();
}

std::string role_message(Role role) {
  return json{{"type", "role"}, {"role", to_string(role)}}.dump();
}

}  // namespace palmgrip
