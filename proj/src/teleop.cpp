// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "dexteach/teleop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "dexteach/error.hpp"
#include "dexteach/retarget.hpp"

namespace dexteach {

void LatencyWindow::push(double sample_us) {
  samples_.push_back(sample_us);
  if (samples_.size() > kCapacity) samples_.pop_front();
}

std::optional<double> LatencyWindow::percentile(double p) const {
  if (samples_.empty()) return std::nullopt;
  std::vector<double> sorted(samples_.begin(), samples_.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(p / 100.0 * n)));
  return sorted[std::min(rank, sorted.size()) - 1];
}

namespace {

int steps_per(double control_hz, double rate_hz) { return static_cast<int>(std::lround(control_hz / rate_hz)); }

bool whole_multiple(double control_hz, double rate_hz) {
  const double ratio = control_hz / rate_hz;
  return rate_hz > 0.0 && ratio >= 1.0 && std::abs(ratio - std::round(ratio)) < 1e-9;
}

HandFrame to_hand_frame(const KeypointFrame& frame) {
  HandFrame out;
  out.timestamp_us = frame.ts_us;
  for (std::size_t i = 0; i < out.keypoints.size(); ++i) {
    out.keypoints[i] = Vec3(frame.points[3 * i], frame.points[3 * i + 1], frame.points[3 * i + 2]);
  }
  return out;
}

DemoMeta demo_meta(const TeleopConfig& cfg) {
  DemoMeta meta;
  meta.model_hash = model_hash(cfg.app.model);
  meta.config_hash = config_hash(cfg.app);
  meta.control_hz = cfg.rates.control_hz;
  meta.feedback_hz = cfg.rates.feedback_hz;
  meta.record_hz = cfg.rates.record_hz;
  return meta;
}

}  // namespace

int TeleopRates::feedback_every() const { return steps_per(control_hz, feedback_hz); }
int TeleopRates::record_every() const { return steps_per(control_hz, record_hz); }

void validate(const TeleopRates& rates, const DynParams& dynamics) {
  if (!(rates.control_hz > 0.0) || std::abs(rates.control_hz * dynamics.dt - 1.0) > 1e-9) {
    fail(ErrorCode::BadRate, "control rate must equal 1 / dt");
  }
  if (!whole_multiple(rates.control_hz, rates.feedback_hz) || !whole_multiple(rates.control_hz, rates.record_hz)) {
    fail(ErrorCode::BadRate, "feedback and record periods must be whole numbers of control steps");
  }
}

KeypointFrame to_keypoint_frame(const HandFrame& frame) {
  KeypointFrame out;
  out.ts_us = frame.timestamp_us;
  for (std::size_t i = 0; i < frame.keypoints.size(); ++i) {
    for (int a = 0; a < 3; ++a) out.points[3 * i + static_cast<std::size_t>(a)] = frame.keypoints[i][a];
  }
  return out;
}

// ---------------------------------------------------------------------------

Ingest::Ingest(const TeleopConfig& cfg) : cfg_(cfg) {}

std::optional<Command> Ingest::accept(const KeypointFrame& frame, std::int64_t now_us) {
  if (last_ts_ && frame.ts_us <= *last_ts_) return std::nullopt;
  const HandFrame hand = to_hand_frame(frame);
  validate_frame(hand);
  const HumanJointAngles angles = extract_joint_angles(hand);
  q_prev_ = retarget(angles, q_prev_, cfg_.app.model, cfg_.app.retarget);
  last_ts_ = frame.ts_us;
  return Command{frame.ts_us, now_us, now_us + cfg_.inject_delay_us, q_prev_};
}

Controller::Controller(const TeleopConfig& cfg) : cfg_(cfg) {}

void Controller::submit(const Command& cmd) { pending_.push_back(cmd); }

TickResult Controller::tick(std::int64_t now_us) {
  TickResult out;
  // Latest wins: of all commands that have become due, only the newest is applied.
  std::optional<Command> due;
  while (!pending_.empty() && pending_.front().apply_us <= now_us) {
    due = pending_.front();
    pending_.pop_front();
  }
  if (due) {
    q_des_ = due->q_des;
    echo_ts_us_ = due->ts_us;
    out.apply_latency_us = now_us - due->ingest_us;
  }
  state_ = step(state_, q_des_, cfg_.app.model, cfg_.app.dynamics);
  ++steps_;
  if (steps_ % static_cast<std::uint64_t>(cfg_.rates.feedback_every()) == 0) {
    out.feedback = make_feedback(cfg_.app.model, state_, now_us, echo_ts_us_);
  }
  if (steps_ % static_cast<std::uint64_t>(cfg_.rates.record_every()) == 0) {
    out.capture = Capture{now_us, state_, q_des_};
  }
  return out;
}

Feedback make_feedback(const HandModel& model, const RobotState& state, std::int64_t ts_us,
                       std::int64_t echo_ts_us) {
  Feedback fb;
  fb.ts_us = ts_us;
  fb.echo_ts_us = echo_ts_us;
  for (int i = 0; i < kNumJoints; ++i) fb.q[static_cast<std::size_t>(i)] = state.q[i];
  const HandKinematics fk = forward_kinematics(model, state.q);
  for (std::size_t f = 0; f < kNumFingers; ++f) {
    for (int a = 0; a < 3; ++a) fb.fingertips[3 * f + static_cast<std::size_t>(a)] = fk.fingers[f].tip[a];
  }
  return fb;
}

// ---------------------------------------------------------------------------

Recorder::Recorder(const TeleopConfig& cfg) : cfg_(cfg) {}

Ack Recorder::start(const std::string& name) {
  if (writer_) return {"record", false, "already recording '" + writer_->name() + "'"};
  try {
    writer_.emplace(DemoWriter::start(cfg_.demo_dir, name, demo_meta(cfg_)));
  } catch (const Error& e) {
    return {"record", false, e.what()};
  }
  return {"record", true, "recording '" + name + "'"};
}

Ack Recorder::stop() {
  if (!writer_) return {"record", false, "not recording"};
  const std::string name = writer_->name();
  std::size_t count = 0;
  try {
    count = writer_->stop().frames.size();
  } catch (const Error& e) {
    writer_.reset();
    return {"record", false, e.what()};
  }
  writer_.reset();
  return {"record", true, "stopped '" + name + "' with " + std::to_string(count) + " frames"};
}

void Recorder::abort() {
  if (!writer_) return;
  try {
    writer_->abort();
  } catch (const Error&) {
    // The frames already flushed stay on disk; the header just keeps complete=false.
  }
  writer_.reset();
}

void Recorder::capture(const Capture& c) {
  if (!writer_) return;
  DemoFrame frame;
  frame.ts_us = c.ts_us;
  frame.observation = render_observation(cfg_.app.model, c.state, cfg_.app.render);
  frame.state = c.state.q;
  frame.command = c.command;
  writer_->append(frame);
  ++frames_;
}

std::int64_t wall_clock_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// ---------------------------------------------------------------------------

namespace {

class VirtualSession final : public Session {
 public:
  VirtualSession(const TeleopConfig& cfg, Emit emit)
      : cfg_(cfg), emit_(std::move(emit)), ingest_(cfg_), controller_(cfg_), recorder_(cfg_) {
    validate(cfg_.rates, cfg_.app.dynamics);
  }

  void on_message(const WireMessage& msg) override {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    if (const auto* kp = std::get_if<KeypointFrame>(&msg)) return on_keypoints(*kp);
    if (const auto* rec = std::get_if<RecordCmd>(&msg)) {
      emit_(rec->action == RecordCmd::Action::Start ? recorder_.start(rec->demo_name) : recorder_.stop());
      return;
    }
    if (const auto* ping = std::get_if<Ping>(&msg)) return emit_(Pong{ping->ts_us});
    emit_(Ack{std::string(message_type(msg)), false, "the server does not accept this message type"});
  }

  void close() override {
    std::lock_guard lock(mutex_);
    closed_ = true;
    recorder_.abort();
  }

  SessionStats stats() const override {
    std::lock_guard lock(mutex_);
    SessionStats s = counters_;
    s.control_steps = controller_.steps();
    s.frames_recorded = recorder_.frames_recorded();
    s.apply_latency_us_p50 = apply_latency_.percentile(50);
    s.apply_latency_us_p95 = apply_latency_.percentile(95);
    return s;
  }

 private:
  std::int64_t tick_time(std::uint64_t k) const {
    const double hz = cfg_.rates.control_hz;
    const auto ki = static_cast<std::int64_t>(k);
    if (hz == std::floor(hz)) return *origin_ + ki * 1000000 / static_cast<std::int64_t>(hz);
    return *origin_ + static_cast<std::int64_t>(std::floor(static_cast<double>(ki) * 1e6 / hz));
  }

  void run_tick() {
    const std::int64_t now = tick_time(controller_.steps() + 1);
    const TickResult r = controller_.tick(now);
    if (r.apply_latency_us) apply_latency_.push(static_cast<double>(*r.apply_latency_us));
    if (r.feedback) {
      ++counters_.feedback_out;
      emit_(*r.feedback);
    }
    if (r.capture && recorder_.recording()) {
      try {
        recorder_.capture(*r.capture);
      } catch (const Error& e) {
        recorder_.abort();
        emit_(Ack{"record", false, std::string("recording aborted: ") + e.what()});
      }
    }
  }

  void on_keypoints(const KeypointFrame& frame) {
    ++counters_.frames_in;
    if (!origin_) {
      origin_ = frame.ts_us;
    } else {
      while (tick_time(controller_.steps() + 1) < frame.ts_us) run_tick();
    }
    std::optional<Command> cmd;
    try {
      cmd = ingest_.accept(frame, frame.ts_us);
    } catch (const Error& e) {
      ++counters_.frames_dropped;
      emit_(Ack{"keypoints", false, e.what()});
      return;
    }
    if (!cmd) {
      ++counters_.frames_dropped;
      return;
    }
    controller_.submit(*cmd);
    if (tick_time(controller_.steps() + 1) == frame.ts_us) run_tick();
  }

  const TeleopConfig cfg_;  // components below hold references into this copy
  Emit emit_;
  mutable std::mutex mutex_;
  Ingest ingest_;
  Controller controller_;
  Recorder recorder_;
  std::optional<std::int64_t> origin_;
  SessionStats counters_;
  LatencyWindow apply_latency_;
  bool closed_ = false;
};

}  // namespace

std::unique_ptr<Session> make_virtual_session(const TeleopConfig& cfg, Emit emit) {
  return std::make_unique<VirtualSession>(cfg, std::move(emit));
}

}  // namespace dexteach
