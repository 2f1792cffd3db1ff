// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "dexteach/teleop.hpp"

namespace dexteach {

struct ServerConfig {
  TeleopConfig teleop{};
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = 7070;  // 0 picks a free port
  bool virtual_time = true;
};

/// TCP service speaking the line protocol, either raw (one JSON object per
/// line) or wrapped in WebSocket text frames when the client opens with an
/// HTTP upgrade. One operator at a time; extra connections receive a failed
/// "connect" ack and are closed.
class TeleopServer {
 public:
  explicit TeleopServer(ServerConfig cfg);
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  /// Binds and starts the network thread. Throws IoError if the address
  /// cannot be bound, BadRate/BadConfig for an invalid configuration.
  void start();
  /// Closes every connection (aborting any recording) and joins the thread.
  void stop();
  /// start(), report the bound port, then block until SIGINT or SIGTERM.
  void run(const std::function<void(std::uint16_t)>& on_ready = {});

  std::uint16_t port() const;
  bool session_active() const;

  /// Snapshot of the active session. Throws NoSession if nobody is connected.
  SessionStats measure_latency() const;
  /// Stats of the most recently closed session, if any.
  std::optional<SessionStats> last_session_stats() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace dexteach
