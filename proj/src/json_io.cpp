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

#include "palmgrip/json_io.hpp"

#include <cstdlib>
#include <fstream>
#include <mutex>

#include "palmgrip/error.hpp"

#ifndef PALMGRIP_SOURCE_DATA_DIR
#define PALMGRIP_SOURCE_DATA_DIR "data"
#endif

namespace palmgrip {

namespace {

std::mutex g_data_dir_mu;
std::filesystem::path g_data_dir_override;

template <typename T>
T get(const json& j, const char* key, std::string_view context) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ParseError(std::string(context) + ": missing key '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string(context) + "." + key + ": " + e.what());
  }
}

void require_object(const json& j, std::string_view context) {
  if (!j.is_object()) throw ParseError(std::string(context) + ": expected a JSON object");
}

}  // namespace

void require_known_keys(const json& j, std::initializer_list<std::string_view> allowed,
                        std::string_view context) {
  require_object(j, context);
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || (a == key);
    if (!known) throw ParseError(std::string(context) + ": unknown key '" + key + "'");
  }
}

void to_json(json& j, const Interval& v) { j = json::array({v.lo, v.hi}); }

void from_json(const json& j, Interval& v) {
  if (!j.is_array() || j.size() != 2) throw ParseError("interval: expected [lo, hi]");
  v.lo = j[0].get<double>();
  v.hi = j[1].get<double>();
}

void to_json(json& j, const ObjectSpec& v) {
  j = json{{"name", v.name},
           {"mass", v.mass},
           {"shape_class", to_string(v.shape_class)},
           {"characteristic_width", v.characteristic_width},
           {"height", v.height},
           {"cloth_like", v.cloth_like},
           {"com_height_frac", v.com_height_frac}};
}

void from_json(const json& j, ObjectSpec& v) {
  constexpr std::string_view ctx = "object";
  require_known_keys(j, {"name", "mass", "shape_class", "characteristic_width", "height",
                         "cloth_like", "com_height_frac"},
                     ctx);
  v.name = get<std::string>(j, "name", ctx);
  v.mass = get<double>(j, "mass", ctx);
  v.shape_class = parse_shape_class(get<std::string>(j, "shape_class", ctx));
  v.characteristic_width = get<double>(j, "characteristic_width", ctx);
  v.height = get<double>(j, "height", ctx);
  v.cloth_like = get<bool>(j, "cloth_like", ctx);
  v.com_height_frac = get<double>(j, "com_height_frac", ctx);
}

void to_json(json& j, const GripperConfig& v) {
  j = json{{"n_fingers", v.n_fingers},
           {"splay_angle", v.splay_angle},
           {"finger_length",
            {{"moulded_oval", v.finger_length_moulded}, {"printed", v.finger_length_printed}}},
           {"palm_radius", v.palm_radius},
           {"finger_mount_radius", v.finger_mount_radius},
           {"servo_range", v.servo_range},
           {"max_palm_speed", v.max_palm_speed},
           {"vacuum_hold_force", v.vacuum_hold_force},
           {"mass_capacity", v.mass_capacity},
           {"squeeze_margin", v.squeeze_margin},
           {"cup_effective_radius", v.cup_effective_radius},
           {"friction_coeff", v.friction_coeff},
           {"com_eccentricity", v.com_eccentricity},
           {"off_center_eccentricity", v.off_center_eccentricity},
           {"palm_accel", v.palm_accel},
           {"valve_latency", v.valve_latency},
           {"regulator_lag", v.regulator_lag},
           {"flip_duration", v.flip_duration}};
}

void from_json(const json& j, GripperConfig& v) {
  constexpr std::string_view ctx = "gripper_config";
  require_known_keys(
      j, {"note", "n_fingers", "splay_angle", "finger_length", "palm_radius",
          "finger_mount_radius", "servo_range", "max_palm_speed", "vacuum_hold_force",
          "mass_capacity", "squeeze_margin", "cup_effective_radius", "friction_coeff",
          "com_eccentricity", "off_center_eccentricity", "palm_accel", "valve_latency",
          "regulator_lag", "flip_duration"},
      ctx);
  // Missing keys keep their documented defaults; present keys must parse.
  GripperConfig out;
  auto opt = [&](const char* key, auto& field) {
    if (j.contains(key)) field = get<std::decay_t<decltype(field)>>(j, key, ctx);
  };
  opt("n_fingers", out.n_fingers);
  opt("splay_angle", out.splay_angle);
  if (j.contains("finger_length")) {
    const json& fl = j.at("finger_length");
    require_known_keys(fl, {"moulded_oval", "printed"}, "gripper_config.finger_length");
    if (fl.contains("moulded_oval")) out.finger_length_moulded = fl.at("moulded_oval").get<double>();
    if (fl.contains("printed")) out.finger_length_printed = fl.at("printed").get<double>();
  }
  opt("palm_radius", out.palm_radius);
  opt("finger_mount_radius", out.finger_mount_radius);
  if (j.contains("servo_range")) out.servo_range = j.at("servo_range").get<Interval>();
  opt("max_palm_speed", out.max_palm_speed);
  opt("vacuum_hold_force", out.vacuum_hold_force);
  opt("mass_capacity", out.mass_capacity);
  opt("squeeze_margin", out.squeeze_margin);
  opt("cup_effective_radius", out.cup_effective_radius);
  opt("friction_coeff", out.friction_coeff);
  opt("com_eccentricity", out.com_eccentricity);
  opt("off_center_eccentricity", out.off_center_eccentricity);
  opt("palm_accel", out.palm_accel);
  opt("valve_latency", out.valve_latency);
  opt("regulator_lag", out.regulator_lag);
  opt("flip_duration", out.flip_duration);
  v = out;
}

void to_json(json& j, const HeldObject& v) {
  j = json{{"object", v.object},
           {"hold_mode", to_string(v.hold_mode)},
           {"object_yaw", v.object_yaw},
           {"rotation_obstructed", v.rotation_obstructed},
           {"com_eccentricity", v.com_eccentricity}};
}

void from_json(const json& j, HeldObject& v) {
  constexpr std::string_view ctx = "held_object";
  require_known_keys(j, {"object", "hold_mode", "object_yaw", "rotation_obstructed",
                         "com_eccentricity"},
                     ctx);
  v.object = get<ObjectSpec>(j, "object", ctx);
  v.hold_mode = parse_hold_mode(get<std::string>(j, "hold_mode", ctx));
  v.object_yaw = get<double>(j, "object_yaw", ctx);
  v.rotation_obstructed = j.value("rotation_obstructed", false);
  v.com_eccentricity = j.value("com_eccentricity", 0.0);
}

void to_json(json& j, const GripperState& v) {
  j = json{{"servo_range", v.servo_range()},
           {"palm_angle", v.palm_angle()},
           {"palm_velocity", v.palm_velocity()},
           {"finger_command", v.finger_command()},
           {"finger_bends", v.finger_bends()},
           {"vacuum_on", v.vacuum_on()},
           {"gripper_facing", to_string(v.facing())},
           {"flip_angle", v.flip_angle()},
           {"held_object", v.held() ? json(*v.held()) : json(nullptr)}};
}

void from_json(const json& j, GripperState& v) {
  constexpr std::string_view ctx = "gripper_state";
  require_known_keys(j, {"servo_range", "palm_angle", "palm_velocity", "finger_command",
                         "finger_bends", "vacuum_on", "gripper_facing", "flip_angle",
                         "held_object"},
                     ctx);
  GripperState s(get<Interval>(j, "servo_range", ctx));
  s.set_palm(get<double>(j, "palm_angle", ctx), get<double>(j, "palm_velocity", ctx));
  s.set_fingers(get<double>(j, "finger_command", ctx),
                get<std::array<double, kFingerCount>>(j, "finger_bends", ctx));
  s.set_vacuum(get<bool>(j, "vacuum_on", ctx));
  s.set_flip_angle(get<double>(j, "flip_angle", ctx));
  if (parse_facing(get<std::string>(j, "gripper_facing", ctx)) != s.facing()) {
    throw ParseError("gripper_state: gripper_facing disagrees with flip_angle");
  }
  const json& held = j.at("held_object");
  if (!held.is_null()) s.set_held(held.get<HeldObject>());
  v = std::move(s);
}

void to_json(json& j, const StageRecord& v) {
  j = json{{"stage", to_string(v.stage)}, {"outcome", to_string(v.status)}};
  j["failure_detail"] = v.failure_detail ? json(to_string(*v.failure_detail)) : json(nullptr);
}

void from_json(const json& j, StageRecord& v) {
  constexpr std::string_view ctx = "stage_outcome";
  require_known_keys(j, {"stage", "outcome", "failure_detail"}, ctx);
  v.stage = parse_stage(get<std::string>(j, "stage", ctx));
  v.status = parse_stage_status(get<std::string>(j, "outcome", ctx));
  v.failure_detail.reset();
  if (j.contains("failure_detail") && !j.at("failure_detail").is_null()) {
    v.failure_detail = parse_failure_kind(j.at("failure_detail").get<std::string>());
  }
}

void to_json(json& j, const TrialResult& v) {
  j = json{{"object", v.object},
           {"finger_type", to_string(v.finger_type)},
           {"stage_outcomes", v.stage_outcomes},
           {"overall_success", v.overall_success},
           {"seed", v.seed}};
}

void from_json(const json& j, TrialResult& v) {
  constexpr std::string_view ctx = "trial_result";
  require_known_keys(j, {"object", "finger_type", "stage_outcomes", "overall_success", "seed"},
                     ctx);
  v.object = get<ObjectSpec>(j, "object", ctx);
  v.finger_type = parse_finger_type(get<std::string>(j, "finger_type", ctx));
  v.stage_outcomes = get<std::vector<StageRecord>>(j, "stage_outcomes", ctx);
  v.overall_success = get<bool>(j, "overall_success", ctx);
  v.seed = get<std::uint64_t>(j, "seed", ctx);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::filesystem::path data_dir() {
  {
    std::lock_guard lock(g_data_dir_mu);
    if (!g_data_dir_override.empty()) return g_data_dir_override;
  }
  if (const char* env = std::getenv("PALMGRIP_DATA_DIR"); env && *env) return env;
  return PALMGRIP_SOURCE_DATA_DIR;
}

void set_data_dir(std::filesystem::path dir) {
  std::lock_guard lock(g_data_dir_mu);
  g_data_dir_override = std::move(dir);
}

std::vector<ObjectSpec> load_objects(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  const json* list = &doc;
  if (doc.is_object()) {
    require_known_keys(doc, {"note", "objects"}, path.string());
    list = &doc.at("objects");
  }
  if (!list->is_array()) throw ParseError(path.string() + ": expected an array of objects");
  std::vector<ObjectSpec> out;
  for (const auto& item : *list) {
    out.push_back(validate_object(item.get<ObjectSpec>()));
  }
  return out;
}

GripperConfig load_config(const std::filesystem::path& path) {
  return validate_config(read_json_file(path).get<GripperConfig>());
}

std::vector<ObjectSpec> builtin_objects() { return load_objects(data_dir() / "objects.json"); }

ObjectSpec builtin_object(std::string_view name) {
  for (auto& o : builtin_objects()) {
    if (o.name == name) return o;
  }
  throw ParseError("no builtin object named '" + std::string(name) + "'");
}

}  // namespace palmgrip
