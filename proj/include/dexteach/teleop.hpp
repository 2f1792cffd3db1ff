// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "dexteach/config.hpp"
#include "dexteach/demo_store.hpp"
#include "dexteach/protocol.hpp"

namespace dexteach {

/// Most recent samples (up to 1024) with nearest-rank percentiles.
class LatencyWindow {
 public:
  static constexpr std::size_t kCapacity = 1024;

  void push(double sample_us);
  std::size_t size() const { return samples_.size(); }
  /// Empty optional when no samples are retained.
  std::optional<double> percentile(double p) const;

 private:
  std::deque<double> samples_;
};

struct SessionStats {
  std::uint64_t frames_in = 0;
  std::uint64_t frames_dropped = 0;
  std::uint64_t feedback_out = 0;
  std::uint64_t control_steps = 0;
  std::uint64_t frames_recorded = 0;
  std::optional<double> rtt_us_p50;
  std::optional<double> rtt_us_p95;
  std::optional<double> apply_latency_us_p50;
  std::optional<double> apply_latency_us_p95;
};

/// Loop rates, all derived from the simulator step.
struct TeleopRates {
  double control_hz = 300.0;
  double feedback_hz = 60.0;
  double record_hz = 5.0;

  int feedback_every() const;  // control steps per feedback message
  int record_every() const;    // control steps per recorded frame
};

/// Throws BadRate unless the feedback and record periods are whole numbers of
/// control steps and control_hz matches 1 / dt.
void validate(const TeleopRates& rates, const DynParams& dynamics);

struct TeleopConfig {
  AppConfig app{};
  TeleopRates rates{};
  std::int64_t inject_delay_us = 0;  // ingest -> apply
  std::filesystem::path demo_dir = "demos";
};

/// Flattens the 21 keypoints into a wire message, x y z per point.
KeypointFrame to_keypoint_frame(const HandFrame& frame);

/// A retargeted command waiting for the control loop.
struct Command {
  std::int64_t ts_us = 0;      // keypoint timestamp it came from
  std::int64_t ingest_us = 0;  // session clock at ingest
  std::int64_t apply_us = 0;   // earliest session time it may be applied
  JointVector q_des = JointVector::Zero();
};

/// Keypoints to commands: ordering, angle extraction and retargeting.
class Ingest {
 public:
  explicit Ingest(const TeleopConfig& cfg);

  /// Empty if the frame is older than one already accepted. Throws the
  /// hand-pose errors for unusable geometry.
  std::optional<Command> accept(const KeypointFrame& frame, std::int64_t now_us);

 private:
  const TeleopConfig& cfg_;
  JointVector q_prev_ = JointVector::Zero();
  std::optional<std::int64_t> last_ts_;
};

struct Capture {
  std::int64_t ts_us = 0;
  RobotState state;
  JointVector command = JointVector::Zero();
};

struct TickResult {
  std::optional<std::int64_t> apply_latency_us;  // set when a new command took effect
  std::optional<Feedback> feedback;
  std::optional<Capture> capture;
};

/// The fixed-rate loop: applies the newest due command, steps the simulator
/// and says when feedback and recording are due.
class Controller {
 public:
  explicit Controller(const TeleopConfig& cfg);

  void submit(const Command& cmd);
  TickResult tick(std::int64_t now_us);

  const RobotState& state() const { return state_; }
  std::uint64_t steps() const { return steps_; }

 private:
  const TeleopConfig& cfg_;
  RobotState state_;
  JointVector q_des_ = JointVector::Zero();
  std::int64_t echo_ts_us_ = -1;
  std::deque<Command> pending_;
  std::uint64_t steps_ = 0;
};

Feedback make_feedback(const HandModel& model, const RobotState& state, std::int64_t ts_us,
                       std::int64_t echo_ts_us);

/// Owns the demo being recorded, if any.
class Recorder {
 public:
  explicit Recorder(const TeleopConfig& cfg);

  Ack start(const std::string& name);
  Ack stop();
  void abort();
  bool recording() const { return writer_.has_value(); }
  void capture(const Capture& c);
  std::uint64_t frames_recorded() const { return frames_; }

 private:
  const TeleopConfig& cfg_;
  std::optional<DemoWriter> writer_;
  std::uint64_t frames_ = 0;
};

/// Sink for outgoing messages. Must be callable from any thread.
using Emit = std::function<void(WireMessage)>;

/// One operator connection's worth of state.
class Session {
 public:
  virtual ~Session() = default;
  virtual void on_message(const WireMessage& msg) = 0;
  /// Connection gone: abort any recording and stop internal loops.
  virtual void close() = 0;
  virtual SessionStats stats() const = 0;
};

/// Every loop is driven by keypoint timestamps: frames advance the clock and
/// the control ticks in between are run synchronously. Deterministic.
std::unique_ptr<Session> make_virtual_session(const TeleopConfig& cfg, Emit emit);

/// Control loop on its own thread paced by the steady clock; recording on a
/// worker thread; ingest on the caller's thread.
std::unique_ptr<Session> make_live_session(const TeleopConfig& cfg, Emit emit);

/// Monotonic wall clock in microseconds.
std::int64_t wall_clock_us();

}  // namespace dexteach
