// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "dexteach/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <csignal>
#include <deque>
#include <mutex>
#include <set>
#include <thread>

#include "dexteach/error.hpp"

namespace dexteach {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

constexpr std::size_t kMaxLineBytes = 1 << 20;
constexpr std::size_t kMaxQueuedMessages = 4096;

class Connection;

}  // namespace

struct TeleopServer::Impl {
  explicit Impl(ServerConfig c) : cfg(std::move(c)) {}

  std::shared_ptr<Session> attach(const std::shared_ptr<Connection>& conn);
  void detach(const std::shared_ptr<Connection>& conn);
  void accept();
  void shutdown();

  ServerConfig cfg;
  asio::io_context io;
  std::optional<tcp::acceptor> acceptor;
  std::optional<asio::signal_set> signals;
  std::thread thread;
  std::uint16_t bound_port = 0;

  // Network thread only.
  std::set<std::shared_ptr<Connection>> connections;
  std::shared_ptr<Connection> owner;

  mutable std::mutex mutex;  // guards session and last_stats
  std::shared_ptr<Session> session;
  std::optional<SessionStats> last_stats;
};

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(TeleopServer::Impl& server, tcp::socket socket) : server_(server), socket_(std::move(socket)) {}

  void start() { sniff(); }

  void send(const WireMessage& msg) {
    if (finished_) return;
    if (outbox_.size() >= kMaxQueuedMessages && std::holds_alternative<Feedback>(msg)) return;
    std::string text;
    try {
      text = encode(msg);
    } catch (const Error&) {
      return;
    }
    outbox_.push_back(std::move(text));
    if (!writing_) write_next();
  }

  /// Tears the connection down; safe to call more than once.
  void finish() {
    if (finished_) return;
    finished_ = true;
    const auto self = shared_from_this();  // detach may drop the server's reference
    server_.detach(self);
    beast::error_code ec;
    if (ws_) {
      beast::get_lowest_layer(*ws_).shutdown(tcp::socket::shutdown_both, ec);
      beast::get_lowest_layer(*ws_).close(ec);
    } else {
      socket_.shutdown(tcp::socket::shutdown_both, ec);
      socket_.close(ec);
    }
  }

 private:
  void sniff() {
    socket_.async_read_some(buffer_.prepare(512), [self = shared_from_this()](beast::error_code ec, std::size_t n) {
      if (ec) return self->finish();
      self->buffer_.commit(n);
      const std::string head = beast::buffers_to_string(self->buffer_.data());
      if (head.size() < 4 && head.find('\n') == std::string::npos) return self->sniff();
      if (head.rfind("GET ", 0) == 0) return self->upgrade();
      self->begin();
      self->raw_in_ = head;
      self->buffer_.consume(self->buffer_.size());
      self->drain_raw();
      self->read_raw();
    });
  }

  void upgrade() {
    http::async_read(socket_, buffer_, request_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec || !websocket::is_upgrade(self->request_)) return self->finish();
      self->ws_.emplace(std::move(self->socket_));
      self->ws_->text(true);
      self->ws_->async_accept(self->request_, [self](beast::error_code ec2) {
        if (ec2) return self->finish();
        self->buffer_.consume(self->buffer_.size());
        self->begin();
        self->read_ws();
      });
    });
  }

  void begin() {
    session_ = server_.attach(shared_from_this());
    if (!session_) {
      send(Ack{"connect", false, "busy: another operator is connected"});
      closing_ = true;
    }
  }

  void read_raw() {
    if (finished_ || closing_) return;
    socket_.async_read_some(asio::buffer(chunk_), [self = shared_from_this()](beast::error_code ec, std::size_t n) {
      if (ec) return self->finish();
      self->raw_in_.append(self->chunk_.data(), n);
      self->drain_raw();
      self->read_raw();
    });
  }

  void drain_raw() {
    std::size_t start = 0;
    for (std::size_t nl = raw_in_.find('\n'); nl != std::string::npos; nl = raw_in_.find('\n', start)) {
      handle_line(std::string_view(raw_in_).substr(start, nl - start));
      start = nl + 1;
    }
    raw_in_.erase(0, start);
    if (raw_in_.size() > kMaxLineBytes) {
      send(Ack{"", false, "line exceeds 1 MiB"});
      raw_in_.clear();
      closing_ = true;
    }
  }

  void read_ws() {
    if (finished_ || closing_) return;
    ws_->async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish();
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      // A frame may carry one or several newline-terminated messages.
      std::size_t start = 0;
      while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string::npos) nl = text.size();
        self->handle_line(std::string_view(text).substr(start, nl - start));
        start = nl + 1;
      }
      self->read_ws();
    });
  }

  void handle_line(std::string_view line) {
    if (!session_ || line.find_first_not_of(" \t\r") == std::string_view::npos) return;
    WireMessage msg;
    try {
      msg = decode(line);
    } catch (const Error& e) {
      send(rejection(line, e));
      return;
    }
    session_->on_message(msg);
  }

  void write_next() {
    if (outbox_.empty()) {
      writing_ = false;
      if (closing_) finish();
      return;
    }
    writing_ = true;
    auto done = [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish();
      self->outbox_.pop_front();
      self->write_next();
    };
    if (ws_) {
      ws_->async_write(asio::buffer(outbox_.front()), std::move(done));
    } else {
      asio::async_write(socket_, asio::buffer(outbox_.front()), std::move(done));
    }
  }

  TeleopServer::Impl& server_;
  tcp::socket socket_;
  std::optional<websocket::stream<tcp::socket>> ws_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  std::array<char, 4096> chunk_{};
  std::string raw_in_;
  std::deque<std::string> outbox_;
  std::shared_ptr<Session> session_;
  bool writing_ = false;
  bool closing_ = false;
  bool finished_ = false;
};

}  // namespace

std::shared_ptr<Session> TeleopServer::Impl::attach(const std::shared_ptr<Connection>& conn) {
  if (owner) return nullptr;
  std::weak_ptr<Connection> weak = conn;
  Emit emit = [this, weak](WireMessage msg) {
    asio::post(io, [weak, msg = std::move(msg)] {
      if (auto c = weak.lock()) c->send(msg);
    });
  };
  std::shared_ptr<Session> created = cfg.virtual_time ? make_virtual_session(cfg.teleop, std::move(emit))
                                                      : make_live_session(cfg.teleop, std::move(emit));
  owner = conn;
  std::lock_guard lock(mutex);
  session = std::move(created);
  return session;
}

void TeleopServer::Impl::detach(const std::shared_ptr<Connection>& conn) {
  connections.erase(conn);
  if (owner != conn) return;
  owner.reset();
  std::shared_ptr<Session> closing;
  {
    std::lock_guard lock(mutex);
    closing = std::move(session);
    session.reset();
  }
  closing->close();
  std::lock_guard lock(mutex);
  last_stats = closing->stats();
}

void TeleopServer::Impl::accept() {
  acceptor->async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    socket.set_option(tcp::no_delay(true), ec);
    auto conn = std::make_shared<Connection>(*this, std::move(socket));
    connections.insert(conn);
    conn->start();
    accept();
  });
}

void TeleopServer::Impl::shutdown() {
  beast::error_code ec;
  if (acceptor) acceptor->close(ec);
  if (signals) signals->cancel(ec);
  const auto open = connections;
  for (const auto& c : open) c->finish();
  io.stop();
}

TeleopServer::TeleopServer(ServerConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

TeleopServer::~TeleopServer() { stop(); }

void TeleopServer::start() {
  validate(impl_->cfg.teleop.rates, impl_->cfg.teleop.app.dynamics);
  beast::error_code ec;
  const auto address = asio::ip::make_address(impl_->cfg.bind_address, ec);
  if (ec) fail(ErrorCode::BadConfig, "invalid bind address '" + impl_->cfg.bind_address + "'");
  const tcp::endpoint endpoint(address, impl_->cfg.port);
  auto& acc = impl_->acceptor.emplace(impl_->io);
  acc.open(endpoint.protocol(), ec);
  if (!ec) acc.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) acc.bind(endpoint, ec);
  if (!ec) acc.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    impl_->acceptor.reset();
    fail(ErrorCode::IoError, "cannot listen on " + impl_->cfg.bind_address + ":" +
                                 std::to_string(impl_->cfg.port) + ": " + ec.message());
  }
  impl_->bound_port = acc.local_endpoint().port();
  impl_->accept();
  impl_->thread = std::thread([this] { impl_->io.run(); });
}

void TeleopServer::stop() {
  if (!impl_->thread.joinable()) return;
  asio::post(impl_->io, [this] { impl_->shutdown(); });
  impl_->thread.join();
}

void TeleopServer::run(const std::function<void(std::uint16_t)>& on_ready) {
  impl_->signals.emplace(impl_->io, SIGINT, SIGTERM);
  impl_->signals->async_wait([this](beast::error_code ec, int) {
    if (!ec) impl_->shutdown();
  });
  start();
  if (on_ready) on_ready(port());
  impl_->thread.join();
}

std::uint16_t TeleopServer::port() const { return impl_->bound_port; }

bool TeleopServer::session_active() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->session != nullptr;
}

SessionStats TeleopServer::measure_latency() const {
  std::shared_ptr<Session> s;
  {
    std::lock_guard lock(impl_->mutex);
    s = impl_->session;
  }
  if (!s) fail(ErrorCode::NoSession, "no operator is connected");
  return s->stats();
}

std::optional<SessionStats> TeleopServer::last_session_stats() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->last_stats;
}

}  // namespace dexteach
