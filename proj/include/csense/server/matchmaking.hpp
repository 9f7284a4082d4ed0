#pragma once
// Waiting-room registry. Times are milliseconds on a caller-supplied
// monotonic clock, so the rules are testable without waiting.

#include <cstdint>
#include <mutex>
#include <optional>
#include <vector>

namespace csense::server {

struct MatchConfig {
  std::size_t target = 1;              // 1..6
  std::int64_t min_wait_ms = 60'000;   // every participant waits at least this long
  std::int64_t timeout_ms = 300'000;   // start with whoever is present after this long
  bool bot_fill = false;               // top up to the target with bots

  void validate() const;
};

struct RoomStatus {
  std::uint64_t room = 0;
  std::size_t present = 0;
  std::size_t target = 0;
  std::int64_t elapsed_ms = 0;  // since the caller joined
};

struct StartEvent {
  std::uint64_t room = 0;
  std::vector<std::uint64_t> clients;  // in join order
  std::size_t bots = 0;
  std::int64_t at_ms = 0;
  bool timed_out = false;
};

/// Rooms fill in order. A room stops taking joins when full or timed out and
/// starts once every member has waited the minimum. Rooms left empty are
/// recycled.
class Matchmaker {
 public:
  explicit Matchmaker(MatchConfig config);

  /// Returns the room joined. A client already waiting keeps its room.
  std::uint64_t join(std::uint64_t client, std::int64_t now_ms);
  /// Returns false if the client was not waiting.
  bool leave(std::uint64_t client);

  /// Rooms ready to start at `now_ms`, removed from the registry.
  std::vector<StartEvent> poll(std::int64_t now_ms);

  std::optional<RoomStatus> status(std::uint64_t client, std::int64_t now_ms) const;
  std::size_t rooms() const;
  std::size_t recycled() const;
  const MatchConfig& config() const { return config_; }

 private:
  struct Member {
    std::uint64_t client = 0;
    std::int64_t joined_ms = 0;
  };
  struct Room {
    std::uint64_t id = 0;
    std::int64_t opened_ms = 0;
    std::vector<Member> members;
  };

  bool accepting(const Room& r, std::int64_t now_ms) const;
  std::optional<std::int64_t> start_time(const Room& r) const;

  MatchConfig config_;
  mutable std::mutex mu_;
  std::vector<Room> rooms_;
  std::uint64_t next_id_ = 1;
  std::size_t recycled_ = 0;
};

}  // namespace csense::server
