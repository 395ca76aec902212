// Copyright 2026 The palmgrip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "palmgrip/server.hpp"

#include <charconv>
#include <deque>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace palmgrip {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

// Telemetry beyond this many unsent messages is dropped for slow clients.
constexpr std::size_t kOutboxLimit = 256;

bool is_telemetry(const std::string& msg) {
  return msg.find(R"("type":"telemetry")") != std::string::npos;
}

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, TeleopCore& core) : ws_(std::move(socket)), core_(core) {}

  void start(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->on_open();
    });
  }

 private:
  void on_open() {
    std::weak_ptr<WsSession> weak = shared_from_this();
    auto exec = ws_.get_executor();
    id_ = core_.connect([weak, exec](std::string msg) {
      net::post(exec, [weak, msg = std::move(msg)]() mutable {
        if (auto self = weak.lock()) self->enqueue(std::move(msg));
      });
    });
    connected_ = true;
    read();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close_session();
      if (!self->ws_.got_text()) {
        self->buffer_.consume(self->buffer_.size());
        return self->close_with(kCloseBinary, "text frames only");
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      if (!self->core_.submit(self->id_, text)) {
        return self->close_with(kCloseMalformed, "malformed");
      }
      self->read();
    });
  }

  void enqueue(std::string msg) {
    if (closing_) return;
    if (outbox_.size() >= kOutboxLimit && is_telemetry(msg)) return;
    outbox_.push_back(std::move(msg));
    if (outbox_.size() == 1) write();
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) return self->close_session();
                      self->outbox_.pop_front();
                      if (!self->outbox_.empty()) self->write();
                    });
  }

  void close_with(int code, const char* why) {
    closing_ = true;
    close_session();
    websocket::close_reason reason(static_cast<websocket::close_code>(code), why);
    ws_.async_close(reason, [self = shared_from_this()](beast::error_code) {});
  }

  void close_session() {
    if (connected_) {
      connected_ = false;
      core_.disconnect(id_);
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  TeleopCore& core_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  ClientId id_ = 0;
  bool connected_ = false;
  bool closing_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, TeleopCore& core) : stream_(std::move(socket)), core_(core) {}

  void start() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (ec) return;
                       self->route();
                     });
  }

 private:
  void route() {
    const std::string target(req_.target());
    if (websocket::is_upgrade(req_)) {
      if (target == "/ws" || target.rfind("/ws?", 0) == 0) {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), core_)->start(std::move(req_));
        return;
      }
      return respond(http::status::not_found, "not found\n");
    }
    if (target == "/healthz") {
      if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
        return respond(http::status::method_not_allowed, "method not allowed\n");
      }
      return respond(http::status::ok, "ok");
    }
    respond(http::status::not_found, "not found\n");
  }

  void respond(http::status status, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::content_type, "text/plain");
    res->keep_alive(false);
    res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  TeleopCore& core_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

BindAddress parse_bind(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) throw ParseError("bind address needs host:port");
  BindAddress b;
  const std::string_view host = text.substr(0, colon);
  const std::string_view port = text.substr(colon + 1);
  if (!host.empty()) b.host = std::string(host);
  unsigned value = 0;
  const auto [end, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || end != port.data() + port.size() || value > 65535) {
    throw ParseError("bad port in bind address '" + std::string(text) + "'");
  }
  b.port = static_cast<unsigned short>(value);
  return b;
}

struct TeleopServer::Impl {
  Impl(TeleopCore& c, const BindAddress& bind) : core(c), acceptor(io) {
    beast::error_code ec;
    const auto address = net::ip::make_address(bind.host, ec);
    if (ec) throw Error("bad bind host '" + bind.host + "': " + ec.message());
    const tcp::endpoint ep{address, bind.port};
    acceptor.open(ep.protocol(), ec);
    if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(ep, ec);
    if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
      throw Error("cannot bind " + bind.host + ":" + std::to_string(bind.port) + ": " +
                  ec.message());
    }
    accept();
  }

  void accept() {
    acceptor.async_accept(net::make_strand(io), [this](beast::error_code ec, tcp::socket s) {
      if (ec) return;
      std::make_shared<HttpSession>(std::move(s), core)->start();
      accept();
    });
  }

  TeleopCore& core;
  net::io_context io;
  tcp::acceptor acceptor;
  std::thread thread;
};

TeleopServer::TeleopServer(TeleopCore& core, const BindAddress& bind)
    : impl_(std::make_unique<Impl>(core, bind)) {}

TeleopServer::~TeleopServer() { stop(); }

unsigned short TeleopServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void TeleopServer::start() {
  impl_->thread = std::thread([this] { impl_->io.run(); });
}

void TeleopServer::run() { impl_->io.run(); }

void TeleopServer::stop() {
  if (!impl_) return;
  impl_->io.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace palmgrip
