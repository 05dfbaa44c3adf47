#include "aeye/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <deque>
#include <iostream>
#include <map>

#include "aeye/error.hpp"
#include "byte_io.hpp"

namespace aeye {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

constexpr std::size_t kMailboxLimit = 16;

const char* mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

}  // namespace

class WsConnection;

struct LiveServer::Impl {
  Impl(const RigConfig& cfg, PerceptionChannel perception, std::filesystem::path record_root)
      : cfg(cfg),
        persister(std::move(record_root)),
        session(cfg, std::move(perception), [this](const CornerCaseRecord& r) { persister.enqueue(r); }),
        acceptor(ioc),
        ticker(ioc),
        signals(ioc) {
    const tcp::endpoint ep(asio::ip::make_address(cfg.live.host), cfg.live.port);
    acceptor.open(ep.protocol());
    acceptor.set_option(asio::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen();
  }

  void accept();
  void schedule_tick();
  void dispatch(std::vector<LiveSession::Outgoing> out);
  void on_message(LiveSession::ClientId id, const std::string& text);
  void on_closed(LiveSession::ClientId id);
  void serve_http(tcp::socket socket);

  RigConfig cfg;
  BackgroundPersister persister;
  LiveSession session;
  asio::io_context ioc{1};
  tcp::acceptor acceptor;
  asio::steady_timer ticker;
  asio::signal_set signals;
  std::map<LiveSession::ClientId, std::shared_ptr<WsConnection>> clients;
  LiveSession::ClientId next_id = 1;
  std::chrono::steady_clock::time_point next_tick;
};

// One browser connection. Outgoing frames sit in a bounded mailbox where a
// newer state_frame replaces an unsent older one.
class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(LiveServer::Impl& server, LiveSession::ClientId id, tcp::socket socket)
      : server_(server), id_(id), ws_(std::move(socket)) {}

  void start(http::request<http::string_body> req) {
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->closed();
      self->read();
    });
  }

  void send(std::string text, bool is_frame) {
    if (closed_) return;
    if (is_frame) {
      for (auto it = mailbox_.begin() + (writing_ ? 1 : 0); it != mailbox_.end(); ++it) {
        if (it->second) {
          it->first = std::move(text);
          return;
        }
      }
    }
    if (mailbox_.size() >= kMailboxLimit) {
      // A client this far behind only loses frames; events are always kept.
      if (is_frame) return;
    }
    mailbox_.emplace_back(std::move(text), is_frame);
    if (!writing_) write();
  }

  void close() {
    if (closed_) return;
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->closed();
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->server_.on_message(self->id_, text);
      self->read();
    });
  }

  void write() {
    writing_ = true;
    ws_.async_write(asio::buffer(mailbox_.front().first), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->mailbox_.pop_front();
      self->writing_ = false;
      if (ec) return self->closed();
      if (!self->mailbox_.empty()) self->write();
    });
  }

  void closed() {
    if (closed_) return;
    closed_ = true;
    server_.on_closed(id_);
  }

  LiveServer::Impl& server_;
  LiveSession::ClientId id_;
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::pair<std::string, bool>> mailbox_;
  bool writing_ = false;
  bool closed_ = false;
};

void LiveServer::Impl::accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    serve_http(std::move(socket));
    accept();
  });
}

void LiveServer::Impl::serve_http(tcp::socket socket) {
  struct Pending {
    beast::tcp_stream stream;
    beast::flat_buffer buffer;
    http::request<http::string_body> req;
    http::response<http::string_body> res;
  };
  auto p = std::make_shared<Pending>(Pending{beast::tcp_stream(std::move(socket)), {}, {}, {}});
  http::async_read(p->stream, p->buffer, p->req, [this, p](beast::error_code ec, std::size_t) {
    if (ec) return;
    if (websocket::is_upgrade(p->req)) {
      const LiveSession::ClientId id = next_id++;
      auto conn = std::make_shared<WsConnection>(*this, id, p->stream.release_socket());
      clients.emplace(id, conn);
      conn->start(std::move(p->req));
      return;
    }
    p->res.version(p->req.version());
    p->res.keep_alive(false);
    std::string target(p->req.target());
    if (target.find("..") != std::string::npos || cfg.live.static_dir.empty() || p->req.method() != http::verb::get) {
      p->res.result(http::status::not_found);
      p->res.body() = "not found\n";
    } else {
      if (target.empty() || target == "/") target = "/index.html";
      const std::filesystem::path file = std::filesystem::path(cfg.live.static_dir) / target.substr(1);
      try {
        p->res.body() = detail::read_file(file);
        p->res.set(http::field::content_type, mime_type(file));
        p->res.result(http::status::ok);
      } catch (const StorageError&) {
        p->res.result(http::status::not_found);
        p->res.body() = "not found\n";
      }
    }
    p->res.prepare_payload();
    http::async_write(p->stream, p->res, [p](beast::error_code, std::size_t) {
      beast::error_code ignored;
      p->stream.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  });
}

void LiveServer::Impl::dispatch(std::vector<LiveSession::Outgoing> out) {
  for (LiveSession::Outgoing& o : out) {
    const auto it = clients.find(o.to);
    if (it == clients.end()) continue;
    const bool is_frame = std::holds_alternative<StateFrame>(o.msg.body);
    it->second->send(encode(o.msg), is_frame);
  }
}

void LiveServer::Impl::on_message(LiveSession::ClientId id, const std::string& text) {
  try {
    dispatch(session.receive(id, decode(text)));
  } catch (const ProtocolError& e) {
    // Malformed input gets a rejection; the connection stays open.
    dispatch({{id, {0, Rejection{std::string("protocol error: ") + e.what()}}}});
  }
}

void LiveServer::Impl::on_closed(LiveSession::ClientId id) {
  clients.erase(id);
  dispatch(session.disconnect(id));
}

void LiveServer::Impl::schedule_tick() {
  next_tick += std::chrono::milliseconds(100);
  ticker.expires_at(next_tick);
  ticker.async_wait([this](beast::error_code ec) {
    if (ec) return;
    try {
      dispatch(session.tick());
    } catch (const std::exception& e) {
      std::cerr << "session error: " << e.what() << "\n";
      dispatch(session.end(e.what()));
    }
    schedule_tick();
  });
}

LiveServer::LiveServer(const RigConfig& cfg, PerceptionChannel perception, std::filesystem::path record_root)
    : impl_(std::make_unique<Impl>(cfg, std::move(perception), std::move(record_root))) {}

LiveServer::~LiveServer() = default;

unsigned short LiveServer::port() const noexcept { return impl_->acceptor.local_endpoint().port(); }

void LiveServer::run(bool handle_signals) {
  Impl& s = *impl_;
  if (handle_signals) {
    s.signals.add(SIGINT);
    s.signals.add(SIGTERM);
    s.signals.async_wait([this](beast::error_code ec, int) {
      if (!ec) stop();
    });
  }
  s.accept();
  s.next_tick = std::chrono::steady_clock::now();
  s.schedule_tick();
  s.ioc.run();
  s.persister.flush();
}

void LiveServer::stop() {
  asio::post(impl_->ioc, [this] {
    Impl& s = *impl_;
    s.dispatch(s.session.end("server stopping"));
    beast::error_code ignored;
    s.acceptor.close(ignored);
    s.ticker.cancel();
    s.signals.cancel();
    for (auto& [id, conn] : s.clients) conn->close();
    // Let close handshakes finish, then stop regardless of stragglers.
    auto timer = std::make_shared<asio::steady_timer>(s.ioc, std::chrono::milliseconds(200));
    timer->async_wait([this, timer](beast::error_code) { impl_->ioc.stop(); });
  });
}

CampaignLog LiveServer::log() const { return impl_->session.log(); }

}  // namespace aeye
