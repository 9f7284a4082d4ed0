#pragma once
// Websocket front end: one io_context thread, a 125 ms absolute-deadline
// tick timer, matchmaking and per-session routing.

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "csense/server/matchmaking.hpp"
#include "csense/server/session_core.hpp"

namespace csense::server {

struct ServerConfig {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  std::string log_dir = "logs";
  LiveConfig session;
  MatchConfig match;
  std::uint64_t seed = 1;      // per-session seeds derive from this and the room id
  std::int64_t waiting_every_ms = 1000;

  void validate() const;
};

void to_json(nlohmann::json& j, const ServerConfig& c);
void from_json(const nlohmann::json& j, ServerConfig& c);

class GameServer {
 public:
  explicit GameServer(ServerConfig config);
  ~GameServer();
  GameServer(const GameServer&) = delete;
  GameServer& operator=(const GameServer&) = delete;

  /// Binds the listener. Returns the bound port.
  std::uint16_t listen();
  /// Runs until stop() (or SIGINT/SIGTERM when asked). Call listen() first.
  void run(bool stop_on_signals = false);
  /// Thread-safe.
  void stop();

  std::size_t sessions_finished() const { return finished_.load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<std::size_t> finished_{0};
};

}  // namespace csense::server
