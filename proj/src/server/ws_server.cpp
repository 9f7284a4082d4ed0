#include "csense/server/ws_server.hpp"

#include <chrono>
#include <csignal>
#include <deque>
#include <iostream>
#include <map>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>

#include "csense/rng.hpp"

namespace csense::server {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

void ServerConfig::validate() const {
  session.validate();
  match.validate();
  if (waiting_every_ms <= 0) throw std::invalid_argument("waiting interval must be positive");
}

void to_json(nlohmann::json& j, const ServerConfig& c) {
  j = nlohmann::json{{"address", c.address},
                     {"port", c.port},
                     {"log_dir", c.log_dir},
                     {"session", c.session},
                     {"match",
                      {{"target", c.match.target},
                       {"min_wait_ms", c.match.min_wait_ms},
                       {"timeout_ms", c.match.timeout_ms},
                       {"bot_fill", c.match.bot_fill}}},
                     {"seed", c.seed},
                     {"waiting_every_ms", c.waiting_every_ms}};
}

void from_json(const nlohmann::json& j, ServerConfig& c) {
  const ServerConfig d;
  c.address = j.value("address", d.address);
  c.port = j.value("port", d.port);
  c.log_dir = j.value("log_dir", d.log_dir);
  c.session = j.contains("session") ? j.at("session").get<LiveConfig>() : d.session;
  c.match = d.match;
  if (j.contains("match")) {
    const auto& m = j.at("match");
    c.match.target = m.value("target", d.match.target);
    c.match.min_wait_ms = m.value("min_wait_ms", d.match.min_wait_ms);
    c.match.timeout_ms = m.value("timeout_ms", d.match.timeout_ms);
    c.match.bot_fill = m.value("bot_fill", d.match.bot_fill);
  }
  c.seed = j.value("seed", d.seed);
  c.waiting_every_ms = j.value("waiting_every_ms", d.waiting_every_ms);
}

namespace {

constexpr std::size_t kMaxQueuedFrames = 64;

struct Connection : std::enable_shared_from_this<Connection> {
  Connection(tcp::socket socket, std::uint64_t id) : ws(std::move(socket)), id(id) {}

  websocket::stream<tcp::socket> ws;
  std::uint64_t id;
  std::string name;
  bool joined = false;
  bool open = false;
  bool closing = false;
  bool lagging = false;  // outgoing queue full; frames are dropped until it drains
  beast::flat_buffer buffer;
  std::deque<std::string> queue;
};

}  // namespace

struct GameServer::Impl {
  explicit Impl(ServerConfig c, std::atomic<std::size_t>& finished)
      : config(std::move(c)), acceptor(ioc), timer(ioc), matchmaker(config.match), finished(finished) {}

  ServerConfig config;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  asio::steady_timer timer;
  Matchmaker matchmaker;
  std::atomic<std::size_t>& finished;
  std::chrono::steady_clock::time_point epoch = std::chrono::steady_clock::now();
  std::chrono::steady_clock::time_point deadline;
  std::int64_t last_waiting_ms = -1;
  std::uint64_t next_client = 1;
  std::map<std::uint64_t, std::shared_ptr<Connection>> conns;
  std::map<std::uint64_t, std::unique_ptr<LiveSession>> sessions;  // by room
  std::map<std::uint64_t, LiveSession*> route;

  std::int64_t now_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - epoch).count();
  }

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec != asio::error::operation_aborted) std::cerr << "accept: " << ec.message() << '\n';
        return;
      }
      auto c = std::make_shared<Connection>(std::move(socket), next_client++);
      conns[c->id] = c;
      c->ws.async_accept([this, c](beast::error_code ec2) {
        if (ec2) return drop(c);
        c->open = true;
        read(c);
      });
      accept();
    });
  }

  void read(const std::shared_ptr<Connection>& c) {
    c->ws.async_read(c->buffer, [this, c](beast::error_code ec, std::size_t) {
      if (ec) return drop(c);
      const std::string text = beast::buffers_to_string(c->buffer.data());
      c->buffer.consume(c->buffer.size());
      on_frame(*c, text);
      read(c);
    });
  }

  void on_frame(Connection& c, const std::string& text) {
    ClientFrame frame;
    try {
      frame = parse_client_frame(text);
    } catch (const ProtocolError& e) {
      std::cerr << fmt::format("client {}: {}\n", c.id, e.what());
      return;
    }
    const std::int64_t now = now_ms();
    if (const auto* join = std::get_if<JoinFrame>(&frame)) {
      if (c.joined) return;
      c.joined = true;
      c.name = join->name;
      matchmaker.join(c.id, now);
      if (auto st = matchmaker.status(c.id, now)) send(c.id, waiting_frame(st->present, st->target, st->elapsed_ms));
      return;
    }
    if (auto it = route.find(c.id); it != route.end()) it->second->receive(c.id, frame, now);
  }

  void send(std::uint64_t client, std::string frame) {
    auto it = conns.find(client);
    if (it == conns.end() || !it->second->open) return;
    auto& c = it->second;
    if (c->queue.size() >= kMaxQueuedFrames) {
      if (!c->lagging) std::cerr << fmt::format("client {}: lagging, dropping frames\n", c->id);
      c->lagging = true;
      return;
    }
    c->queue.push_back(std::move(frame));
    if (c->queue.size() == 1) write(c);
  }

  void write(const std::shared_ptr<Connection>& c) {
    c->ws.text(true);
    c->ws.async_write(asio::buffer(c->queue.front()), [this, c](beast::error_code ec, std::size_t) {
      if (ec) return drop(c);
      c->queue.pop_front();
      if (!c->queue.empty()) return write(c);
      c->lagging = false;
      if (c->closing) close(c);
    });
  }

  void close(const std::shared_ptr<Connection>& c) {
    c->open = false;
    c->ws.async_close(websocket::close_code::normal, [this, c](beast::error_code) { drop(c); });
  }

  /// Closes once queued frames are flushed.
  void close_after_flush(std::uint64_t client) {
    auto it = conns.find(client);
    if (it == conns.end() || !it->second->open) return;
    it->second->closing = true;
    if (it->second->queue.empty()) close(it->second);
  }

  void drop(const std::shared_ptr<Connection>& c) {
    if (!conns.erase(c->id)) return;
    c->open = false;
    matchmaker.leave(c->id);
    if (auto it = route.find(c->id); it != route.end()) {
      it->second->disconnect(c->id, now_ms());
      route.erase(it);
    }
    beast::error_code ignored;
    c->ws.next_layer().close(ignored);
  }

  void start_sessions(std::int64_t now) {
    for (const auto& e : matchmaker.poll(now)) {
      std::vector<Participant> humans;
      for (auto client : e.clients) {
        auto it = conns.find(client);
        humans.push_back({client, it == conns.end() ? std::string{} : it->second->name});
      }
      const std::uint64_t seed = derive_seed(config.seed, {e.room});
      auto s = std::make_unique<LiveSession>(fmt::format("room-{}-{:016x}", e.room, seed), config.session,
                                             std::move(humans), e.bots, seed);
      for (auto client : e.clients) route[client] = s.get();
      sessions[e.room] = std::move(s);
    }
  }

  void on_tick() {
    const std::int64_t now = now_ms();
    start_sessions(now);
    for (auto it = sessions.begin(); it != sessions.end();) {
      LiveSession& s = *it->second;
      for (auto& o : s.tick(now)) send(o.client, std::move(o.frame));
      if (!s.ended()) {
        ++it;
        continue;
      }
      try {
        persist_session(s, config.log_dir);
      } catch (const std::exception& e) {
        std::cerr << fmt::format("session {}: {}\n", s.id(), e.what());
      }
      for (auto client : s.clients()) {
        route.erase(client);
        close_after_flush(client);
      }
      ++finished;
      it = sessions.erase(it);
    }
    if (last_waiting_ms < 0 || now - last_waiting_ms >= config.waiting_every_ms) {
      last_waiting_ms = now;
      for (const auto& [id, c] : conns) {
        if (!c->joined || route.count(id)) continue;
        if (auto st = matchmaker.status(id, now)) send(id, waiting_frame(st->present, st->target, st->elapsed_ms));
      }
    }
  }

  void schedule() {
    // Absolute deadlines: a late tick does not push back the ones after it.
    deadline += std::chrono::milliseconds(125);
    timer.expires_at(deadline);
    timer.async_wait([this](beast::error_code ec) {
      if (ec) return;
      on_tick();
      schedule();
    });
  }
};

GameServer::GameServer(ServerConfig config) {
  config.validate();
  impl_ = std::make_unique<Impl>(std::move(config), finished_);
}

GameServer::~GameServer() = default;

std::uint16_t GameServer::listen() {
  auto& a = impl_->acceptor;
  const tcp::endpoint ep(asio::ip::make_address(impl_->config.address), impl_->config.port);
  a.open(ep.protocol());
  a.set_option(asio::socket_base::reuse_address(true));
  a.bind(ep);
  a.listen();
  return a.local_endpoint().port();
}

void GameServer::run(bool stop_on_signals) {
  asio::signal_set signals(impl_->ioc);
  if (stop_on_signals) {
    signals.add(SIGINT);
    signals.add(SIGTERM);
    signals.async_wait([this](beast::error_code ec, int) {
      if (!ec) stop();
    });
  }
  impl_->accept();
  impl_->deadline = std::chrono::steady_clock::now();
  impl_->schedule();
  impl_->ioc.run();
}

void GameServer::stop() {
  asio::post(impl_->ioc, [this] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
    impl_->timer.cancel();
    for (auto& [id, c] : impl_->conns) c->ws.next_layer().close(ignored);
    impl_->ioc.stop();
  });
}

}  // namespace csense::server
