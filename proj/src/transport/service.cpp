#include "hapcompass/transport/service.hpp"

#include <array>
#include <atomic>
#include <condition_variable>
#include <csignal>
#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "hapcompass/core/errors.hpp"
#include "hapcompass/transport/codec.hpp"
#include "hapcompass/transport/log_io.hpp"

namespace hapcompass::transport {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

std::int64_t steady_micros() {
  return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

ClockMode parse_clock_mode(std::string_view name) {
  if (name == "realtime") return ClockMode::realtime;
  if (name == "stepped") return ClockMode::stepped;
  throw ConfigError("unknown clock mode '" + std::string(name) + "' (expected realtime or stepped)");
}

std::string_view to_string(ClockMode mode) { return mode == ClockMode::realtime ? "realtime" : "stepped"; }

namespace {

using Line = std::shared_ptr<const std::string>;

struct Disconnect {};
using InboxItem = std::variant<HandPoseMsg, Disconnect>;

std::string_view mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript; charset=utf-8";
  if (ext == ".css") return "text/css; charset=utf-8";
  if (ext == ".json" || ext == ".ndjson") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

}  // namespace

struct Service::Impl {
  struct Peer {
    virtual ~Peer() = default;
    virtual void deliver(Line line) = 0;
    virtual void close() = 0;

    SeqCounter out_seq;
    SeqTracker in_seq;
    bool controller = false;
  };

  class TcpPeer;
  class WsPeer;
  class HttpSession;

  explicit Impl(ServiceConfig c) : cfg(std::move(c)), tcp_acceptor(io), ws_acceptor(io), signals(io) {}

  ServiceConfig cfg;
  asio::io_context io;
  tcp::acceptor tcp_acceptor;
  tcp::acceptor ws_acceptor;
  asio::signal_set signals;
  std::set<std::shared_ptr<Peer>> peers;  // io thread only
  std::unique_ptr<Session> session;

  std::mutex inbox_mutex;
  std::condition_variable inbox_cv;
  std::deque<InboxItem> inbox;
  std::optional<HandPoseMsg> latest_pose;
  bool stop_requested = false;
  bool controller_lost = false;

  std::atomic<std::uint64_t> ticks{0}, decode_errors{0}, seq_gaps{0}, rejected_poses{0}, probes_echoed{0}, peer_count{0};

  std::thread io_thread;
  std::thread tick_thread;
  bool started = false;
  bool joined = false;
  ServiceResult result;
  std::exception_ptr failure;

  void bind(tcp::acceptor& acc, std::uint16_t port) {
    try {
      const tcp::endpoint ep(asio::ip::make_address(cfg.bind_address), port);
      acc.open(ep.protocol());
      acc.set_option(asio::socket_base::reuse_address(true));
      acc.bind(ep);
      acc.listen();
    } catch (const boost::system::system_error& e) {
      throw std::runtime_error("cannot bind " + cfg.bind_address + ":" + std::to_string(port) + ": " + e.what());
    }
  }

  void accept_tcp();
  void accept_ws();

  void send_to(Peer& p, std::string_view kind, const json& payload) {
    Envelope e{p.out_seq.next(kind), steady_micros(), std::string(kind), payload};
    p.deliver(std::make_shared<const std::string>(encode(e)));
  }

  void broadcast(std::string_view kind, const json& payload) {
    for (const auto& p : peers) send_to(*p, kind, payload);
  }

  void on_line(Peer& p, std::string_view line) {
    Envelope e;
    try {
      e = decode(line);
    } catch (const DecodeError&) {
      ++decode_errors;
      return;
    }
    if (const auto gap = p.in_seq.observe(e.kind, e.seq)) {
      ++seq_gaps;
      broadcast(kinds::episode_event,
                to_payload(EpisodeEventMsg{session_clock(), "seq_gap",
                                           {{"kind", gap->kind}, {"expected", gap->expected}, {"received", gap->received}}}));
    }
    if (e.kind == kinds::hand_pose) {
      HandPoseMsg pose;
      try {
        pose = hand_pose_from(e.payload);
      } catch (const std::exception&) {
        ++rejected_poses;
        return;
      }
      p.controller = true;
      {
        std::lock_guard lk(inbox_mutex);
        if (cfg.clock == ClockMode::stepped) {
          inbox.emplace_back(pose);
        } else {
          latest_pose = pose;
        }
      }
      inbox_cv.notify_all();
    } else if (e.kind == kinds::latency_probe) {
      LatencyProbeMsg probe;
      try {
        probe = latency_probe_from(e.payload);
      } catch (const std::exception&) {
        ++decode_errors;
        return;
      }
      probe.t_server = steady_micros();
      send_to(p, kinds::latency_probe, to_payload(probe));
      ++probes_echoed;
    }
  }

  // Episode time for diagnostics; the session itself belongs to the tick thread.
  double session_clock() {
    return static_cast<double>(ticks.load()) * cfg.session.tick_dt;
  }

  void add_peer(const std::shared_ptr<Peer>& p) {
    peers.insert(p);
    ++peer_count;
  }

  void on_peer_closed(const std::shared_ptr<Peer>& p) {
    if (peers.erase(p) == 0) return;
    if (p->controller) {
      {
        std::lock_guard lk(inbox_mutex);
        if (cfg.clock == ClockMode::stepped) {
          inbox.emplace_back(Disconnect{});
        } else {
          controller_lost = true;
        }
      }
      inbox_cv.notify_all();
    }
  }

  void publish(const TickOutput& out) {
    std::vector<std::pair<std::string_view, json>> msgs;
    msgs.emplace_back(kinds::sensor_frame, to_payload(out.frame));
    msgs.emplace_back(kinds::haptic_cmd, to_payload(out.cue));
    msgs.emplace_back(kinds::device_telemetry,
                      to_payload(DeviceTelemetryMsg{out.frame.t, out.device.realized_angle, out.device.target_angle,
                                                    out.device.amplitude, out.device.polarity}));
    if (out.event) {
      msgs.emplace_back(kinds::episode_event,
                        to_payload(EpisodeEventMsg{out.event->t, std::string(metrics::to_string(out.event->kind)), json::object()}));
    }
    asio::post(io, [this, msgs = std::move(msgs)] {
      for (const auto& [kind, payload] : msgs) broadcast(kind, payload);
    });
  }

  void tick_loop();
  void shutdown_endpoints();
};

class Service::Impl::TcpPeer : public Service::Impl::Peer, public std::enable_shared_from_this<TcpPeer> {
 public:
  TcpPeer(Impl& svc, tcp::socket s) : svc_(svc), socket_(std::move(s)) {}

  void start() { read(); }

  void deliver(Line line) override {
    if (closed_) return;
    queue_.push_back(std::move(line));
    if (!writing_) write_next();
  }

  void close() override {
    if (closed_) return;
    closed_ = true;
    boost::system::error_code ec;
    socket_.shutdown(tcp::socket::shutdown_both, ec);
    socket_.close(ec);
    svc_.on_peer_closed(shared_from_this());
  }

 private:
  void read() {
    socket_.async_read_some(asio::buffer(buf_), [self = shared_from_this()](boost::system::error_code ec, std::size_t n) {
      if (ec) {
        self->close();
        return;
      }
      self->framer_.feed(std::string_view(self->buf_.data(), n));
      try {
        while (auto line = self->framer_.next_line()) self->svc_.on_line(*self, *line);
      } catch (const DecodeError&) {
        ++self->svc_.decode_errors;
        self->close();
        return;
      }
      self->read();
    });
  }

  void write_next() {
    writing_ = true;
    asio::async_write(socket_, asio::buffer(*queue_.front()),
                      [self = shared_from_this()](boost::system::error_code ec, std::size_t) {
                        if (ec) {
                          self->close();
                          return;
                        }
                        self->queue_.pop_front();
                        if (self->queue_.empty()) {
                          self->writing_ = false;
                        } else {
                          self->write_next();
                        }
                      });
  }

  Impl& svc_;
  tcp::socket socket_;
  std::array<char, 16384> buf_{};
  LineFramer framer_;
  std::deque<Line> queue_;
  bool writing_ = false;
  bool closed_ = false;
};

class Service::Impl::WsPeer : public Service::Impl::Peer, public std::enable_shared_from_this<WsPeer> {
 public:
  WsPeer(Impl& svc, beast::tcp_stream stream) : svc_(svc), ws_(std::move(stream)) {}

  void run(http::request<http::string_body> req) {
    beast::get_lowest_layer(ws_).expires_never();
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->svc_.add_peer(self);
      self->read();
    });
  }

  void deliver(Line line) override {
    if (closed_) return;
    queue_.push_back(std::move(line));
    if (!writing_) write_next();
  }

  void close() override {
    if (closed_) return;
    closed_ = true;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(ws_).socket().close(ec);
    svc_.on_peer_closed(shared_from_this());
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->close();
        return;
      }
      std::string msg = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      if (msg.empty() || msg.back() != '\n') msg.push_back('\n');
      std::size_t start = 0;
      while (start < msg.size()) {
        const std::size_t nl = msg.find('\n', start);
        self->svc_.on_line(*self, std::string_view(msg).substr(start, nl + 1 - start));
        start = nl + 1;
      }
      self->read();
    });
  }

  void write_next() {
    writing_ = true;
    ws_.async_write(asio::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->close();
        return;
      }
      self->queue_.pop_front();
      if (self->queue_.empty()) {
        self->writing_ = false;
      } else {
        self->write_next();
      }
    });
  }

  Impl& svc_;
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<Line> queue_;
  bool writing_ = false;
  bool closed_ = false;
};

// First request on the web-socket port: either an upgrade or a static
// file under /ui.
class Service::Impl::HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(Impl& svc, tcp::socket s) : svc_(svc), stream_(std::move(s)) {}

  void start() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (websocket::is_upgrade(self->req_)) {
        std::make_shared<WsPeer>(self->svc_, std::move(self->stream_))->run(std::move(self->req_));
        return;
      }
      self->respond();
    });
  }

 private:
  void respond() {
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(false);
    res->set(http::field::server, "hapcompass");
    std::string target(req_.target());
    if (const auto q = target.find('?'); q != std::string::npos) target.resize(q);
    const auto file = resolve(target);
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      res->result(http::status::method_not_allowed);
    } else if (!file) {
      res->result(http::status::not_found);
      res->set(http::field::content_type, "text/plain");
      res->body() = "not found\n";
    } else {
      std::ifstream in(*file, std::ios::binary);
      std::ostringstream body;
      body << in.rdbuf();
      res->result(http::status::ok);
      res->set(http::field::content_type, std::string(mime_type(*file)));
      res->body() = body.str();
    }
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ec;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
    });
  }

  std::optional<std::filesystem::path> resolve(const std::string& target) const {
    if (svc_.cfg.ui_dir.empty()) return std::nullopt;
    std::string rel;
    if (target == "/ui" || target == "/ui/" || target == "/") {
      rel = "index.html";
    } else if (target.rfind("/ui/", 0) == 0) {
      rel = target.substr(4);
    } else {
      return std::nullopt;
    }
    const std::filesystem::path p(rel);
    for (const auto& part : p) {
      if (part == "..") return std::nullopt;
    }
    const std::filesystem::path full = svc_.cfg.ui_dir / p;
    if (!std::filesystem::is_regular_file(full)) return std::nullopt;
    return full;
  }

  Impl& svc_;
  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

void Service::Impl::accept_tcp() {
  tcp_acceptor.async_accept([this](boost::system::error_code ec, tcp::socket s) {
    if (ec) return;
    s.set_option(tcp::no_delay(true));
    auto peer = std::make_shared<TcpPeer>(*this, std::move(s));
    add_peer(peer);
    peer->start();
    accept_tcp();
  });
}

void Service::Impl::accept_ws() {
  ws_acceptor.async_accept([this](boost::system::error_code ec, tcp::socket s) {
    if (ec) return;
    s.set_option(tcp::no_delay(true));
    std::make_shared<HttpSession>(*this, std::move(s))->start();
    accept_ws();
  });
}

void Service::Impl::tick_loop() {
  try {
    Session& s = *session;
    publish(s.initial());
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(cfg.session.tick_dt));
    auto deadline = std::chrono::steady_clock::now();
    while (!s.finished()) {
      std::optional<HandPoseMsg> pose;
      bool end = false;
      {
        std::unique_lock lk(inbox_mutex);
        if (cfg.clock == ClockMode::realtime) {
          deadline += period;
          inbox_cv.wait_until(lk, deadline, [&] { return stop_requested || controller_lost; });
          end = stop_requested || controller_lost;
          pose = std::exchange(latest_pose, std::nullopt);
        } else {
          inbox_cv.wait(lk, [&] { return stop_requested || !inbox.empty(); });
          if (stop_requested) {
            end = true;
          } else {
            InboxItem item = std::move(inbox.front());
            inbox.pop_front();
            if (std::holds_alternative<Disconnect>(item)) {
              end = true;
            } else {
              pose = std::get<HandPoseMsg>(item);
            }
          }
        }
      }
      if (end) {
        s.abort();
        const metrics::EpisodeEvent e = *s.log().terminal_event();
        asio::post(io, [this, e] {
          broadcast(kinds::episode_event, to_payload(EpisodeEventMsg{e.t, std::string(metrics::to_string(e.kind)), json::object()}));
        });
        break;
      }
      publish(s.tick(pose));
      ++ticks;
    }
    result.log = s.log();
    if (!cfg.log_path.empty()) {
      write_episode_log(cfg.log_path, result.log, cfg.config);
      result.log_path = cfg.log_path;
    }
  } catch (...) {
    failure = std::current_exception();
  }
  auto timer = std::make_shared<asio::steady_timer>(io, cfg.linger);
  timer->async_wait([this, timer](boost::system::error_code) { shutdown_endpoints(); });
}

void Service::Impl::shutdown_endpoints() {
  boost::system::error_code ec;
  tcp_acceptor.close(ec);
  ws_acceptor.close(ec);
  signals.cancel(ec);
  const auto snapshot = peers;
  for (const auto& p : snapshot) p->close();
  io.stop();
}

Service::Service(ServiceConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

Service::~Service() {
  if (impl_->started && !impl_->joined) {
    stop();
    try {
      wait();
    } catch (...) {
    }
  }
}

void Service::start() {
  Impl& s = *impl_;
  if (s.started) throw std::logic_error("service already started");
  s.session = std::make_unique<Session>(s.cfg.session);
  s.bind(s.tcp_acceptor, s.cfg.tcp_port);
  s.bind(s.ws_acceptor, s.cfg.ws_port);
  s.accept_tcp();
  s.accept_ws();
  if (s.cfg.handle_signals) {
    s.signals.add(SIGINT);
    s.signals.add(SIGTERM);
    s.signals.async_wait([this](boost::system::error_code ec, int) {
      if (!ec) stop();
    });
  }
  s.started = true;
  s.io_thread = std::thread([&s] { s.io.run(); });
  s.tick_thread = std::thread([&s] { s.tick_loop(); });
}

std::uint16_t Service::tcp_port() const { return impl_->tcp_acceptor.local_endpoint().port(); }
std::uint16_t Service::ws_port() const { return impl_->ws_acceptor.local_endpoint().port(); }

void Service::stop() {
  {
    std::lock_guard lk(impl_->inbox_mutex);
    impl_->stop_requested = true;
  }
  impl_->inbox_cv.notify_all();
}

ServiceResult Service::wait() {
  Impl& s = *impl_;
  if (!s.started) throw std::logic_error("service not started");
  if (!s.joined) {
    s.tick_thread.join();
    s.io_thread.join();
    s.joined = true;
  }
  if (s.failure) std::rethrow_exception(s.failure);
  s.result.stats = {s.ticks.load(), s.decode_errors.load(), s.seq_gaps.load(), s.rejected_poses.load(),
                    s.probes_echoed.load(), s.peer_count.load()};
  return s.result;
}

struct TcpClient::Impl {
  asio::io_context io;
  tcp::socket socket{io};
  std::thread reader;
  std::mutex write_mutex;
  std::mutex queue_mutex;
  std::condition_variable queue_cv;
  std::deque<Envelope> queue;
  bool closed = false;
  std::atomic<std::uint64_t> decode_errors{0};
  SeqCounter seq;

  void read_loop() {
    LineFramer framer;
    std::array<char, 16384> buf{};
    boost::system::error_code ec;
    while (true) {
      const std::size_t n = socket.read_some(asio::buffer(buf), ec);
      if (ec) break;
      framer.feed(std::string_view(buf.data(), n));
      std::vector<Envelope> batch;
      try {
        while (auto line = framer.next_line()) {
          try {
            batch.push_back(decode(*line));
          } catch (const DecodeError&) {
            ++decode_errors;
          }
        }
      } catch (const DecodeError&) {
        ++decode_errors;
        break;
      }
      if (!batch.empty()) {
        std::lock_guard lk(queue_mutex);
        for (auto& e : batch) queue.push_back(std::move(e));
        queue_cv.notify_all();
      }
    }
    std::lock_guard lk(queue_mutex);
    closed = true;
    queue_cv.notify_all();
  }
};

TcpClient::TcpClient(const std::string& host, std::uint16_t port) : impl_(std::make_unique<Impl>()) {
  try {
    tcp::resolver resolver(impl_->io);
    asio::connect(impl_->socket, resolver.resolve(host, std::to_string(port)));
    impl_->socket.set_option(tcp::no_delay(true));
  } catch (const boost::system::system_error& e) {
    throw std::runtime_error("cannot connect to " + host + ":" + std::to_string(port) + ": " + e.what());
  }
  impl_->reader = std::thread([this] { impl_->read_loop(); });
}

TcpClient::~TcpClient() { close(); }

void TcpClient::send(std::string_view kind, json payload, std::int64_t t_send) {
  Envelope e;
  {
    std::lock_guard lk(impl_->write_mutex);
    e = Envelope{impl_->seq.next(kind), t_send, std::string(kind), std::move(payload)};
  }
  send_envelope(e);
}

void TcpClient::send_envelope(const Envelope& e) { send_raw(encode(e)); }

void TcpClient::send_raw(std::string_view bytes) {
  std::lock_guard lk(impl_->write_mutex);
  asio::write(impl_->socket, asio::buffer(bytes.data(), bytes.size()));
}

std::optional<Envelope> TcpClient::receive(std::chrono::milliseconds timeout) {
  std::unique_lock lk(impl_->queue_mutex);
  impl_->queue_cv.wait_for(lk, timeout, [&] { return !impl_->queue.empty() || impl_->closed; });
  if (impl_->queue.empty()) return std::nullopt;
  Envelope e = std::move(impl_->queue.front());
  impl_->queue.pop_front();
  return e;
}

bool TcpClient::closed() const {
  std::lock_guard lk(impl_->queue_mutex);
  return impl_->closed && impl_->queue.empty();
}

std::uint64_t TcpClient::decode_errors() const { return impl_->decode_errors.load(); }

void TcpClient::close() {
  if (!impl_ || !impl_->reader.joinable()) return;
  // Half-close first and keep draining: closing with unread input makes the
  // kernel reset the connection, which can discard poses the service has not
  // read yet.
  boost::system::error_code ec;
  impl_->socket.shutdown(tcp::socket::shutdown_send, ec);
  {
    std::unique_lock lk(impl_->queue_mutex);
    impl_->queue_cv.wait_for(lk, std::chrono::seconds(5), [&] { return impl_->closed; });
  }
  impl_->socket.shutdown(tcp::socket::shutdown_both, ec);
  impl_->reader.join();
  impl_->socket.close(ec);
}

}  // namespace hapcompass::transport
