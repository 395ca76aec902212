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

// JSON mapping for the core types. Keys are the snake_case field names;
// unknown keys are rejected with ParseError. A top-level "note" key is
// tolerated in data files as a human comment.

#pragma once

#include <filesystem>
#include <initializer_list>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "palmgrip/core_model.hpp"

namespace palmgrip {

using json = nlohmann::json;

/// Throws ParseError naming the first key of `j` not in `allowed`.
void require_known_keys(const json& j, std::initializer_list<std::string_view> allowed,
                        std::string_view context);

void to_json(json& j, const Interval& v);
void from_json(const json& j, Interval& v);
void to_json(json& j, const ObjectSpec& v);
void from_json(const json& j, ObjectSpec& v);
void to_json(json& j, const GripperConfig& v);
void from_json(const json& j, GripperConfig& v);
void to_json(json& j, const HeldObject& v);
void from_json(const json& j, HeldObject& v);
void to_json(json& j, const GripperState& v);
void from_json(const json& j, GripperState& v);
void to_json(json& j, const StageRecord& v);
void from_json(const json& j, StageRecord& v);
void to_json(json& j, const TrialResult& v);
void from_json(const json& j, TrialResult& v);

json read_json_file(const std::filesystem::path& path);

/// Directory holding objects.json, gripper_config.json, curve and rule files.
/// Resolution order: set_data_dir() override, $PALMGRIP_DATA_DIR, the
/// source-tree data/ directory baked in at build time.
std::filesystem::path data_dir();
void set_data_dir(std::filesystem::path dir);

std::vector<ObjectSpec> load_objects(const std::filesystem::path& path);
GripperConfig load_config(const std::filesystem::path& path);

/// The five reference test objects, in reference-table order.
std::vector<ObjectSpec> builtin_objects();
/// Lookup in builtin_objects() by name; throws ParseError when absent.
ObjectSpec builtin_object(std::string_view name);

}  // namespace palmgrip
