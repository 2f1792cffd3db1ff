// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <array>
#include <cstdint>
#include <exception>
#include <string>
#include <string_view>
#include <variant>

namespace dexteach {

// Newline-delimited JSON messages; byte-level reference in docs/protocol.md.

struct KeypointFrame {
  std::int64_t ts_us = 0;
  std::array<double, 63> points{};  // 21 keypoints, x y z each, metres
  friend bool operator==(const KeypointFrame&, const KeypointFrame&) = default;
};

struct Feedback {
  std::int64_t ts_us = 0;
  std::int64_t echo_ts_us = -1;  // -1 until a command has been applied
  std::array<double, 16> q{};
  std::array<double, 12> fingertips{};  // index, middle, ring, thumb tips
  friend bool operator==(const Feedback&, const Feedback&) = default;
};

struct RecordCmd {
  enum class Action { Start, Stop };
  Action action = Action::Start;
  std::string demo_name;
  friend bool operator==(const RecordCmd&, const RecordCmd&) = default;
};

struct Ack {
  std::string of;
  bool ok = true;
  std::string msg;
  friend bool operator==(const Ack&, const Ack&) = default;
};

struct Ping {
  std::int64_t ts_us = 0;
  friend bool operator==(const Ping&, const Ping&) = default;
};

struct Pong {
  std::int64_t echo_ts_us = 0;
  friend bool operator==(const Pong&, const Pong&) = default;
};

using WireMessage = std::variant<KeypointFrame, Feedback, RecordCmd, Ack, Ping, Pong>;

std::string_view message_type(const WireMessage& msg);

/// One JSON line ending in '\n'. Throws MalformedMessage for non-finite numbers.
std::string encode(const WireMessage& msg);

/// Accepts one line with or without its trailing newline. Unknown fields are
/// ignored. Throws MalformedMessage (bad JSON, missing or mistyped field,
/// wrong arity) or UnknownType.
WireMessage decode(std::string_view line);

/// Reply to a line that failed to decode; `of` is the line's type when readable.
Ack rejection(std::string_view line, const std::exception& error);

}  // namespace dexteach
