// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "dexteach/loopback.hpp"

#include <cmath>
#include <thread>

#include "dexteach/client.hpp"
#include "dexteach/error.hpp"

namespace dexteach {

using namespace std::chrono_literals;

std::vector<HandFrame> gesture_stream(const LoopbackOptions& opts) {
  if (!(opts.keypoint_hz > 0.0) || !(opts.duration_s > 0.0)) {
    fail(ErrorCode::BadRate, "keypoint rate and duration must be positive");
  }
  auto count = static_cast<std::int64_t>(std::floor(opts.duration_s * opts.keypoint_hz + 1e-9));
  if (opts.include_end) ++count;
  std::vector<HandFrame> frames;
  frames.reserve(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) {
    const std::int64_t ts = frame_timestamp_us(k, opts.keypoint_hz);
    frames.push_back(
        synthesize_frame(gesture_pose(opts.gesture, static_cast<double>(ts) * 1e-6, opts.duration_s, opts.seed), ts));
  }
  return frames;
}

LoopbackReport run_loopback(const TeleopServer& server, const LoopbackOptions& opts) {
  const std::vector<HandFrame> frames = gesture_stream(opts);
  LoopbackReport report;
  {
    TeleopClient client("127.0.0.1", server.port());
    if (opts.record_name) {
      const std::size_t mark = client.received_count();
      client.send(RecordCmd{RecordCmd::Action::Start, *opts.record_name});
      const auto ack = client.wait_ack("record", mark);
      if (!ack) fail(ErrorCode::SessionClosed, "no reply to record start");
      if (!ack->ok) fail(ErrorCode::IoError, "recording refused: " + ack->msg);
    }
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& f : frames) {
      if (opts.realtime) std::this_thread::sleep_until(t0 + std::chrono::microseconds(f.timestamp_us));
      client.send(to_keypoint_frame(f));
      ++report.frames_sent;
    }
    if (opts.record_name) {
      const std::size_t mark = client.received_count();
      client.send(RecordCmd{RecordCmd::Action::Stop, *opts.record_name});
      report.record_stop_ack = client.wait_ack("record", mark, 30s);
      if (!report.record_stop_ack) fail(ErrorCode::SessionClosed, "no reply to record stop");
    }
    for (int i = 0; i < std::max(1, opts.pings); ++i) {
      if (!client.ping(10s)) fail(ErrorCode::SessionClosed, "ping timed out");
      if (opts.realtime) std::this_thread::sleep_for(1ms);
    }
    // Every message sent so far has been handled once the last pong is back.
    report.server = server.measure_latency();
    report.client = client.stats();
    report.malformed_received = client.malformed_count();
    for (const auto& msg : client.received()) {
      if (const auto* fb = std::get_if<Feedback>(&msg)) report.feedback.push_back(*fb);
      if (const auto* ack = std::get_if<Ack>(&msg); ack && !ack->ok) report.failed_acks.push_back(*ack);
    }
  }
  // Let the server retire the session so the next connection is not refused.
  for (int i = 0; i < 1000 && server.session_active(); ++i) std::this_thread::sleep_for(5ms);
  return report;
}

}  // namespace dexteach
