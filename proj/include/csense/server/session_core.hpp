#pragma once
// Transport-free live session: input queues, rounds, health enforcement and
// per-client views over a SessionRunner. The websocket layer only moves
// frames in and out.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csense/scorefield.hpp"
#include "csense/server/health.hpp"
#include "csense/server/protocol.hpp"
#include "csense/session.hpp"

namespace csense::server {

enum class Phase { waiting, practice, active, ended };
std::string_view to_string(Phase p);

/// A practice round played before the game.
struct RoundSpec {
  std::string name;
  std::size_t ticks = 480;
  bool field_visible = false;
  std::optional<FieldSpec> field;  // default: the game's field spec
};

struct LiveConfig {
  SessionConfig game;              // seats are filled from participants and bots
  std::vector<RoundSpec> practice;
  ScoreDisplay score_display = ScoreDisplay::points;
  HealthRules health{};
  std::size_t ping_every = 8;      // ticks
  SeatConfig bot{StrategyKind::social_inference, {}, {}, false};
  bool record_traffic = false;     // keep every outgoing frame per client

  void validate() const;
};

void to_json(nlohmann::json& j, const LiveConfig& c);
void from_json(const nlohmann::json& j, LiveConfig& c);

/// Four one-minute rounds, field shown in the first and third.
std::vector<RoundSpec> default_practice_rounds(std::size_t ticks = 480);

struct Participant {
  std::uint64_t client = 0;
  std::string name;
};

struct Outgoing {
  std::uint64_t client = 0;
  std::string frame;
};

struct Removal {
  std::size_t seat = 0;
  std::string reason;
  std::string round;
  std::size_t t = 0;
};

/// Seats are the participants in order, then `bots` back-fill seats.
class LiveSession {
 public:
  LiveSession(std::string id, LiveConfig config, std::vector<Participant> humans, std::size_t bots,
              std::uint64_t seed);
  ~LiveSession();
  LiveSession(const LiveSession&) = delete;
  LiveSession& operator=(const LiveSession&) = delete;

  /// Queues a client frame; inputs take effect at the start of the next tick.
  void receive(std::uint64_t client, const ClientFrame& frame, std::int64_t now_ms);
  void disconnect(std::uint64_t client, std::int64_t now_ms);

  /// Runs one 125 ms tick and returns the frames to send.
  std::vector<Outgoing> tick(std::int64_t now_ms);

  const std::string& id() const { return id_; }
  Phase phase() const { return phase_; }
  bool ended() const { return phase_ == Phase::ended; }
  bool ended_early() const { return ended_early_; }
  std::optional<std::size_t> seat_of(std::uint64_t client) const;
  std::vector<std::uint64_t> clients() const;
  std::size_t humans_remaining() const;

  /// Game-round ReplayLog as recorded so far.
  const ReplayLog& game_log() const;
  const std::vector<ReplayLog>& practice_logs() const { return practice_logs_; }
  const std::vector<Removal>& removals() const { return removals_; }
  /// Frames sent to a client (record_traffic only).
  const std::vector<std::string>& traffic(std::uint64_t client) const;
  /// Game-round configuration with the actual seat list.
  const SessionConfig& game_config() const { return game_config_; }

  nlohmann::json index_entry() const;

 private:
  struct Seat;
  struct Round;

  void begin_round(std::vector<Outgoing>& out);
  void end_round(std::vector<Outgoing>& out);
  void finish(std::vector<Outgoing>& out, bool early);
  void remove(std::size_t seat, RemovalReason reason, std::vector<Outgoing>& out);
  void send(std::vector<Outgoing>& out, std::size_t seat, std::string frame);
  StateView view(std::size_t seat) const;
  nlohmann::json config_public(std::size_t seat) const;
  bool in_practice() const { return round_index_ < config_.practice.size(); }

  std::string id_;
  LiveConfig config_;
  SessionConfig game_config_;
  std::uint64_t seed_;
  std::vector<Seat> seats_;
  std::unique_ptr<Round> round_;
  std::size_t round_index_ = 0;
  Phase phase_ = Phase::waiting;
  bool ended_early_ = false;
  bool had_humans_ = false;
  std::vector<ExternalInput> pending_;
  std::vector<ReplayLog> practice_logs_;
  ReplayLog game_log_;
  std::vector<Removal> removals_;
  std::uint64_t next_nonce_ = 1;
  std::int64_t started_ms_ = -1;
  std::int64_t ended_ms_ = -1;
};

/// Writes the game log (and practice logs) under `dir` and appends the
/// session to `dir/sessions.jsonl`. Returns the game log path.
std::string persist_session(const LiveSession& s, const std::string& dir);

}  // namespace csense::server
