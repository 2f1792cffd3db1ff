// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dexteach/teleop.hpp"

namespace dexteach {

/// Blocking line-protocol client. A background thread reads and decodes
/// everything the server sends; callers inspect or wait on that log.
class TeleopClient {
 public:
  /// Throws IoError if the connection cannot be made.
  TeleopClient(const std::string& host, std::uint16_t port);
  ~TeleopClient();
  TeleopClient(const TeleopClient&) = delete;
  TeleopClient& operator=(const TeleopClient&) = delete;

  /// Throws SessionClosed once the connection is gone.
  void send(const WireMessage& msg);
  /// Writes raw bytes, for exercising the server with malformed input.
  void send_raw(const std::string& bytes);

  using Predicate = std::function<bool(const std::vector<WireMessage>&)>;
  /// Blocks until `pred` holds for the received log, the connection closes or
  /// the timeout passes. Returns whether `pred` held.
  bool wait_for(const Predicate& pred, std::chrono::milliseconds timeout);

  /// Sends a ping stamped with the local clock and waits for its pong.
  /// Returns the round trip in microseconds, also kept in stats().
  std::optional<double> ping(std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));

  /// Waits for the next ack whose `of` matches, counting from the current log size.
  std::optional<Ack> wait_ack(const std::string& of, std::size_t after,
                              std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));

  std::vector<WireMessage> received() const;
  std::size_t received_count() const;
  std::uint64_t malformed_count() const;
  bool connected() const;

  /// RTT percentiles measured by this client; other fields are left zero.
  SessionStats stats() const;

  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dexteach
