// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dexteach/hand_pose.hpp"
#include "dexteach/server.hpp"

namespace dexteach {

struct LoopbackOptions {
  Gesture gesture = Gesture::GraspClose;
  double duration_s = 10.0;
  double keypoint_hz = 60.0;
  bool include_end = true;  // also send the frame stamped exactly duration_s
  std::uint64_t seed = 0;
  std::optional<std::string> record_name;
  int pings = 1;  // at least one, so the final pong flushes the session
  bool realtime = false;  // pace frames by their timestamps (live servers)
};

struct LoopbackReport {
  SessionStats server;  // snapshot taken before disconnecting
  SessionStats client;  // round-trip percentiles
  std::vector<Feedback> feedback;
  std::uint64_t frames_sent = 0;
  std::uint64_t malformed_received = 0;
  std::vector<Ack> failed_acks;
  std::optional<Ack> record_stop_ack;
};

/// Keypoint frames of a gesture clip, evenly spaced from t = 0.
std::vector<HandFrame> gesture_stream(const LoopbackOptions& opts);

/// Connects a client to `server` on 127.0.0.1, streams the gesture (inside a
/// recording when record_name is set), pings, then disconnects.
/// Throws IoError on connection trouble, SessionClosed on a timeout.
LoopbackReport run_loopback(const TeleopServer& server, const LoopbackOptions& opts);

}  // namespace dexteach
