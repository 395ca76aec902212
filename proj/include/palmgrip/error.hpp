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

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace palmgrip {

/// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One or more invariants failed. `issues()` holds one line per violation,
/// each starting with the offending field name.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// An angle or command outside its admissible interval.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// An argument outside a function's mathematical domain (e.g. u > 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The operation is not valid in the current gripper/world state.
class StateError : public Error {
 public:
  using Error::Error;
};

/// A calibration target a finger cannot reach.
class UnreachableTargetError : public Error {
 public:
  UnreachableTargetError(int finger, const std::string& what)
      : Error(what), finger_(finger) {}
  int finger() const { return finger_; }

 private:
  int finger_;
};

/// Malformed input document (JSON files, wire messages).
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace palmgrip
