// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "dexteach/client.hpp"

#include <boost/asio.hpp>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "dexteach/error.hpp"

namespace dexteach {

namespace asio = boost::asio;
using tcp = asio::ip::tcp;

struct TeleopClient::Impl {
  asio::io_context io;
  tcp::socket socket{io};
  std::thread reader;
  std::mutex write_mutex;

  mutable std::mutex mutex;
  std::condition_variable cv;
  std::vector<WireMessage> log;
  std::uint64_t malformed = 0;
  bool open = true;
  LatencyWindow rtt;

  void read_loop() {
    asio::streambuf buf;
    boost::system::error_code ec;
    for (;;) {
      const std::size_t n = asio::read_until(socket, buf, '\n', ec);
      if (ec) break;
      std::string line(asio::buffers_begin(buf.data()), asio::buffers_begin(buf.data()) + static_cast<std::ptrdiff_t>(n));
      buf.consume(n);
      std::lock_guard lock(mutex);
      try {
        log.push_back(decode(line));
      } catch (const Error&) {
        ++malformed;
      }
      cv.notify_all();
    }
    std::lock_guard lock(mutex);
    open = false;
    cv.notify_all();
  }
};

TeleopClient::TeleopClient(const std::string& host, std::uint16_t port) : impl_(std::make_unique<Impl>()) {
  boost::system::error_code ec;
  tcp::resolver resolver(impl_->io);
  const auto endpoints = resolver.resolve(host, std::to_string(port), ec);
  if (!ec) asio::connect(impl_->socket, endpoints, ec);
  if (ec) fail(ErrorCode::IoError, "cannot connect to " + host + ":" + std::to_string(port) + ": " + ec.message());
  impl_->socket.set_option(tcp::no_delay(true), ec);
  impl_->reader = std::thread([this] { impl_->read_loop(); });
}

TeleopClient::~TeleopClient() { close(); }

void TeleopClient::close() {
  if (!impl_->reader.joinable()) return;
  boost::system::error_code ec;
  impl_->socket.shutdown(tcp::socket::shutdown_both, ec);
  impl_->reader.join();
  impl_->socket.close(ec);
}

void TeleopClient::send_raw(const std::string& bytes) {
  if (!connected()) fail(ErrorCode::SessionClosed, "connection is closed");
  std::lock_guard lock(impl_->write_mutex);
  boost::system::error_code ec;
  asio::write(impl_->socket, asio::buffer(bytes), ec);
  if (ec) fail(ErrorCode::SessionClosed, "connection lost: " + ec.message());
}

void TeleopClient::send(const WireMessage& msg) { send_raw(encode(msg)); }

bool TeleopClient::wait_for(const Predicate& pred, std::chrono::milliseconds timeout) {
  std::unique_lock lock(impl_->mutex);
  return impl_->cv.wait_for(lock, timeout, [&] { return pred(impl_->log) || !impl_->open; }) && pred(impl_->log);
}

std::optional<double> TeleopClient::ping(std::chrono::milliseconds timeout) {
  const std::int64_t stamp = wall_clock_us();
  std::size_t from = received_count();
  send(Ping{stamp});
  const bool ok = wait_for(
      [&](const std::vector<WireMessage>& log) {
        for (std::size_t i = from; i < log.size(); ++i) {
          const auto* pong = std::get_if<Pong>(&log[i]);
          if (pong && pong->echo_ts_us == stamp) return true;
        }
        return false;
      },
      timeout);
  if (!ok) return std::nullopt;
  const auto rtt = static_cast<double>(wall_clock_us() - stamp);
  std::lock_guard lock(impl_->mutex);
  impl_->rtt.push(rtt);
  return rtt;
}

std::optional<Ack> TeleopClient::wait_ack(const std::string& of, std::size_t after,
                                          std::chrono::milliseconds timeout) {
  std::optional<Ack> found;
  wait_for(
      [&](const std::vector<WireMessage>& log) {
        for (std::size_t i = after; i < log.size(); ++i) {
          const auto* ack = std::get_if<Ack>(&log[i]);
          if (ack && ack->of == of) {
            found = *ack;
            return true;
          }
        }
        return false;
      },
      timeout);
  return found;
}

std::vector<WireMessage> TeleopClient::received() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->log;
}

std::size_t TeleopClient::received_count() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->log.size();
}

std::uint64_t TeleopClient::malformed_count() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->malformed;
}

bool TeleopClient::connected() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->open;
}

SessionStats TeleopClient::stats() const {
  std::lock_guard lock(impl_->mutex);
  SessionStats s;
  s.rtt_us_p50 = impl_->rtt.percentile(50);
  s.rtt_us_p95 = impl_->rtt.percentile(95);
  return s;
}

}  // namespace dexteach
