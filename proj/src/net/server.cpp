#include "crew/net/server.hpp"

#include <deque>
#include <fstream>
#include <sstream>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace crew::net {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

std::string content_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

// Resolves a request target inside root; empty when it escapes root or is missing.
std::filesystem::path resolve_static(const std::filesystem::path& root, std::string target) {
  if (root.empty()) return {};
  target = target.substr(0, target.find_first_of("?#"));
  if (target.empty() || target.back() == '/') target += "index.html";
  const std::filesystem::path rel = std::filesystem::path(target).relative_path();
  for (const auto& part : rel) {
    if (part == "..") return {};
  }
  const auto full = root / rel;
  std::error_code ec;
  return std::filesystem::is_regular_file(full, ec) ? full : std::filesystem::path{};
}

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, Lobby& lobby, const std::filesystem::path& static_dir)
      : stream_(std::move(socket)), lobby_(lobby), static_dir_(static_dir) {}

  ~Connection() {
    if (id_) lobby_.close(id_);
  }

  void start() {
    auto self = shared_from_this();
    asio::async_read(stream_.socket(), asio::buffer(head_), [self](beast::error_code ec, std::size_t) {
      if (!ec) self->dispatch();
    });
  }

 private:
  void dispatch() {
    if (std::string_view(head_.data(), 4) == "GET ") {
      auto b = buffer_.prepare(4);
      std::memcpy(b.data(), head_.data(), 4);
      buffer_.commit(4);
      read_http();
      return;
    }
    attach();
    decoder_.feed(head_.data(), 4);
    if (drain_decoder()) read_raw();
  }

  void attach() {
    outbox_ = std::make_shared<Outbox>();
    std::weak_ptr<Connection> weak = shared_from_this();
    auto exec = stream_.get_executor();
    outbox_->set_notify([weak, exec] {
      asio::post(exec, [weak] {
        if (auto self = weak.lock()) self->pump();
      });
    });
    id_ = lobby_.open(outbox_);
  }

  // Raw framing.
  void read_raw() {
    auto self = shared_from_this();
    stream_.socket().async_read_some(asio::buffer(chunk_), [self](beast::error_code ec, std::size_t n) {
      if (ec) return;
      self->decoder_.feed(self->chunk_.data(), n);
      if (self->drain_decoder()) self->read_raw();
    });
  }

  bool drain_decoder() {
    try {
      while (auto payload = decoder_.next_payload()) {
        if (!lobby_.receive(id_, *payload)) return close_after_flush();
      }
    } catch (const ProtocolError& e) {
      outbox_->send("", Error{e.code(), e.what()});
      return close_after_flush();
    }
    return true;
  }

  bool close_after_flush() {
    closing_ = true;
    pump();
    return false;
  }

  // HTTP and WebSocket.
  void read_http() {
    auto self = shared_from_this();
    http::async_read(stream_, buffer_, request_, [self](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (websocket::is_upgrade(self->request_)) {
        self->upgrade();
      } else {
        self->serve_file();
      }
    });
  }

  void serve_file() {
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(request_.version());
    res->keep_alive(false);
    const auto path = resolve_static(static_dir_, std::string(request_.target()));
    if (path.empty()) {
      res->result(http::status::not_found);
      res->set(http::field::content_type, "text/plain");
      res->body() = "not found\n";
    } else {
      std::ifstream in(path, std::ios::binary);
      std::ostringstream os;
      os << in.rdbuf();
      res->result(http::status::ok);
      res->set(http::field::content_type, content_type(path));
      res->body() = os.str();
    }
    res->prepare_payload();
    auto self = shared_from_this();
    http::async_write(stream_, *res, [self, res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_both, ignored);
    });
  }

  void upgrade() {
    ws_ = std::make_unique<websocket::stream<beast::tcp_stream>>(std::move(stream_));
    ws_->read_message_max(kMaxFrameBytes);
    auto self = shared_from_this();
    ws_->async_accept(request_, [self](beast::error_code ec) {
      if (ec) return;
      self->attach();
      self->read_ws();
    });
  }

  void read_ws() {
    auto self = shared_from_this();
    ws_buffer_.clear();
    ws_->async_read(ws_buffer_, [self](beast::error_code ec, std::size_t) {
      if (ec) return;
      const std::string payload = beast::buffers_to_string(self->ws_buffer_.data());
      if (!self->lobby_.receive(self->id_, payload)) {
        self->close_after_flush();
        return;
      }
      self->read_ws();
    });
  }

  // Writes everything queued in the outbox, one write in flight at a time.
  void pump() {
    if (writing_ || !outbox_) return;
    for (auto& e : outbox_->drain()) pending_.push_back(ws_ ? encode_payload(e) : encode(e));
    if (pending_.empty()) {
      if (closing_) shutdown();
      return;
    }
    writing_ = true;
    auto self = shared_from_this();
    auto done = [self](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      self->pending_.pop_front();
      if (ec) return;
      self->pump();
    };
    if (ws_) {
      ws_->text(true);
      ws_->async_write(asio::buffer(pending_.front()), done);
    } else {
      asio::async_write(stream_.socket(), asio::buffer(pending_.front()), done);
    }
  }

  void shutdown() {
    beast::error_code ignored;
    if (ws_) {
      beast::get_lowest_layer(*ws_).socket().shutdown(tcp::socket::shutdown_both, ignored);
    } else {
      stream_.socket().shutdown(tcp::socket::shutdown_both, ignored);
    }
  }

  beast::tcp_stream stream_;
  Lobby& lobby_;
  const std::filesystem::path& static_dir_;
  std::array<char, 4> head_{};
  std::array<char, 16384> chunk_{};
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  std::unique_ptr<websocket::stream<beast::tcp_stream>> ws_;
  beast::flat_buffer ws_buffer_;
  FrameDecoder decoder_;
  std::shared_ptr<Outbox> outbox_;
  ClientId id_ = 0;
  std::deque<std::string> pending_;
  bool writing_ = false;
  bool closing_ = false;
};

}  // namespace

struct Server::Impl {
  Impl(Lobby& l, Options o) : lobby(l), opt(std::move(o)), acceptor(io), timer(io) {}

  void accept() {
    acceptor.async_accept(asio::make_strand(io), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Connection>(std::move(socket), lobby, opt.static_dir)->start();
      accept();
    });
  }

  void schedule_ping() {
    timer.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(opt.ping_interval_s)));
    timer.async_wait([this](beast::error_code ec) {
      if (ec) return;
      lobby.ping_all();
      schedule_ping();
    });
  }

  Lobby& lobby;
  Options opt;
  asio::io_context io;
  tcp::acceptor acceptor;
  asio::steady_timer timer;
  std::vector<std::thread> threads;
};

Server::Server(Lobby& lobby, Options opt) : impl_(std::make_unique<Impl>(lobby, std::move(opt))) {
  const tcp::endpoint ep(asio::ip::make_address(impl_->opt.bind), impl_->opt.port);
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen();
}

Server::~Server() { stop(); }

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
  impl_->accept();
  impl_->schedule_ping();
  for (int i = 0; i < std::max(1, impl_->opt.threads); ++i) {
    impl_->threads.emplace_back([this] { impl_->io.run(); });
  }
}

void Server::stop() {
  if (impl_->threads.empty()) return;
  impl_->io.stop();
  for (auto& t : impl_->threads) t.join();
  impl_->threads.clear();
}

std::pair<std::string, unsigned short> parse_bind(const std::string& text) {
  const auto colon = text.rfind(':');
  std::string host = colon == std::string::npos ? "0.0.0.0" : text.substr(0, colon);
  const std::string port = colon == std::string::npos ? text : text.substr(colon + 1);
  if (host.empty()) host = "0.0.0.0";
  std::size_t used = 0;
  unsigned long p = 0;
  try {
    p = std::stoul(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port.size() || port.empty() || p > 65535) throw std::invalid_argument("bad bind address '" + text + "'");
  return {host, static_cast<unsigned short>(p)};
}

}  // namespace crew::net
