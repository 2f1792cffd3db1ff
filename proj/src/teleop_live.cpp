// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include <atomic>
#include <boost/lockfree/spsc_queue.hpp>
#include <chrono>
#include <condition_variable>
#include <thread>

#include "dexteach/error.hpp"
#include "dexteach/teleop.hpp"

namespace dexteach {

namespace {

// Ingest runs on the caller's (network) thread, the controller on its own
// paced thread, rendering and disk writes on a recorder thread. The control
// thread never takes a lock the other threads can hold for long: commands
// reach it through a wait-free queue and captures leave through a deque whose
// mutex is only held for a push or a swap.
class LiveSession final : public Session {
 public:
  LiveSession(const TeleopConfig& cfg, Emit emit)
      : cfg_(cfg), emit_(std::move(emit)), ingest_(cfg_), controller_(cfg_), recorder_(cfg_) {
    validate(cfg_.rates, cfg_.app.dynamics);
    control_thread_ = std::thread([this] { control_loop(); });
    record_thread_ = std::thread([this] { record_loop(); });
  }

  ~LiveSession() override { close(); }

  void on_message(const WireMessage& msg) override {
    if (!running_) return;
    if (const auto* kp = std::get_if<KeypointFrame>(&msg)) return on_keypoints(*kp);
    if (const auto* rec = std::get_if<RecordCmd>(&msg)) {
      std::lock_guard lock(recorder_mutex_);
      if (rec->action == RecordCmd::Action::Start) {
        Ack ack = recorder_.start(rec->demo_name);
        recording_ = recorder_.recording();
        emit_(std::move(ack));
      } else {
        recording_ = false;
        drain_captures_locked();
        emit_(recorder_.stop());
      }
      return;
    }
    if (const auto* ping = std::get_if<Ping>(&msg)) return emit_(Pong{ping->ts_us});
    emit_(Ack{std::string(message_type(msg)), false, "the server does not accept this message type"});
  }

  void close() override {
    if (running_.exchange(false)) {
      control_thread_.join();
      captures_cv_.notify_all();
      record_thread_.join();
      std::lock_guard lock(recorder_mutex_);
      recording_ = false;
      recorder_.abort();
    }
  }

  SessionStats stats() const override {
    SessionStats s;
    s.frames_in = frames_in_;
    s.frames_dropped = frames_dropped_;
    s.feedback_out = feedback_out_;
    s.control_steps = control_steps_;
    s.frames_recorded = frames_recorded_;
    std::lock_guard lock(stats_mutex_);
    s.apply_latency_us_p50 = apply_latency_.percentile(50);
    s.apply_latency_us_p95 = apply_latency_.percentile(95);
    return s;
  }

 private:
  void on_keypoints(const KeypointFrame& frame) {
    ++frames_in_;
    std::optional<Command> cmd;
    try {
      cmd = ingest_.accept(frame, wall_clock_us());
    } catch (const Error& e) {
      ++frames_dropped_;
      emit_(Ack{"keypoints", false, e.what()});
      return;
    }
    if (!cmd || !commands_.push(*cmd)) ++frames_dropped_;
  }

  void control_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration<double>(cfg_.app.dynamics.dt);
    const auto start = clock::now();
    std::uint64_t k = 0;
    while (running_) {
      ++k;
      std::this_thread::sleep_until(start + std::chrono::duration_cast<clock::duration>(period * static_cast<double>(k)));
      commands_.consume_all([this](const Command& c) { controller_.submit(c); });
      const TickResult r = controller_.tick(wall_clock_us());
      control_steps_ = controller_.steps();
      if (r.apply_latency_us) {
        std::lock_guard lock(stats_mutex_);
        apply_latency_.push(static_cast<double>(*r.apply_latency_us));
      }
      if (r.feedback) {
        ++feedback_out_;
        emit_(*r.feedback);
      }
      if (r.capture && recording_) {
        {
          std::lock_guard lock(captures_mutex_);
          captures_.push_back(*r.capture);
        }
        captures_cv_.notify_one();
      }
    }
  }

  void record_loop() {
    while (running_) {
      {
        std::unique_lock lock(captures_mutex_);
        captures_cv_.wait_for(lock, std::chrono::milliseconds(50),
                              [this] { return !captures_.empty() || !running_; });
      }
      std::lock_guard lock(recorder_mutex_);
      drain_captures_locked();
    }
  }

  // Caller holds recorder_mutex_.
  void drain_captures_locked() {
    std::deque<Capture> batch;
    {
      std::lock_guard lock(captures_mutex_);
      batch.swap(captures_);
    }
    for (const auto& c : batch) {
      if (!recorder_.recording()) return;
      try {
        recorder_.capture(c);
        frames_recorded_ = recorder_.frames_recorded();
      } catch (const Error& e) {
        recording_ = false;
        recorder_.abort();
        emit_(Ack{"record", false, std::string("recording aborted: ") + e.what()});
      }
    }
  }

  const TeleopConfig cfg_;
  Emit emit_;
  Ingest ingest_;
  Controller controller_;
  Recorder recorder_;

  boost::lockfree::spsc_queue<Command, boost::lockfree::capacity<1024>> commands_;
  std::mutex captures_mutex_;
  std::condition_variable captures_cv_;
  std::deque<Capture> captures_;
  std::mutex recorder_mutex_;
  std::atomic<bool> recording_{false};

  std::atomic<std::uint64_t> frames_in_{0};
  std::atomic<std::uint64_t> frames_dropped_{0};
  std::atomic<std::uint64_t> feedback_out_{0};
  std::atomic<std::uint64_t> control_steps_{0};
  std::atomic<std::uint64_t> frames_recorded_{0};
  mutable std::mutex stats_mutex_;
  LatencyWindow apply_latency_;

  std::atomic<bool> running_{true};
  std::thread control_thread_;
  std::thread record_thread_;
};

}  // namespace

std::unique_ptr<Session> make_live_session(const TeleopConfig& cfg, Emit emit) {
  return std::make_unique<LiveSession>(cfg, std::move(emit));
}

}  // namespace dexteach
