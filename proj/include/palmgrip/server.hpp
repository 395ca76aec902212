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

// HTTP/WebSocket front end for TeleopCore: `/ws` and `GET /healthz`.

#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "palmgrip/teleop_core.hpp"

namespace palmgrip {

struct BindAddress {
  std::string host = "127.0.0.1";
  unsigned short port = 8765;
};

/// "host:port" or ":port". Throws ParseError.
BindAddress parse_bind(std::string_view text);

/// Close codes sent on protocol violations.
inline constexpr int kCloseMalformed = 1008;  // policy violation
inline constexpr int kCloseBinary = 1003;     // unsupported data

class TeleopServer {
 public:
  /// Binds immediately; throws Error when the address is unavailable.
  TeleopServer(TeleopCore& core, const BindAddress& bind);
  ~TeleopServer();

  /// Port actually bound (useful with port 0).
  unsigned short port() const;
  /// Serves on a background thread until stop().
  void start();
  /// Serves on the calling thread until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace palmgrip
