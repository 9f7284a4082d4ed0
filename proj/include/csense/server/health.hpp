#pragma once
// Per-client removal rules: hidden tab, wall contact and latency.

#include <cstdint>
#include <optional>
#include <string_view>

namespace csense::server {

struct HealthRules {
  std::int64_t hidden_limit_ms = 30'000;      // accumulated; removal when exceeded
  std::int64_t wall_limit_ms = 30'000;        // consecutive; removal when reached
  std::int64_t latency_threshold_ms = 125;    // a ping slower than this is "high"
  std::int64_t high_latency_limit_ms = 75'000;  // accumulated; removal when exceeded
};

enum class RemovalReason { hidden_tab, wall_contact, high_latency, disconnected };

std::string_view to_string(RemovalReason r);

/// Counters for one client. Time advances in ticks; pings are matched to
/// pongs by nonce.
class ClientHealth {
 public:
  explicit ClientHealth(HealthRules rules = {}) : rules_(rules) {}

  void set_hidden(bool hidden) { hidden_ = hidden; }
  bool hidden() const { return hidden_; }

  void ping_sent(std::uint64_t nonce, std::int64_t now_ms);
  /// Returns the measured latency, or nothing for an unknown nonce.
  std::optional<std::int64_t> pong(std::uint64_t nonce, std::int64_t now_ms);

  /// Accounts one tick of `dt_ms` ending at `now_ms`. `wall` is whether the
  /// avatar was pressed against the boundary during the tick.
  void on_tick(std::int64_t dt_ms, std::int64_t now_ms, bool wall);

  std::optional<RemovalReason> verdict() const;

  std::int64_t hidden_ms() const { return hidden_ms_; }
  std::int64_t wall_ms() const { return wall_ms_; }
  std::int64_t high_latency_ms() const { return high_latency_ms_; }
  std::optional<std::int64_t> last_latency() const { return last_latency_; }

 private:
  HealthRules rules_;
  bool hidden_ = false;
  std::int64_t hidden_ms_ = 0;
  std::int64_t wall_ms_ = 0;
  std::int64_t high_latency_ms_ = 0;
  std::optional<std::int64_t> last_latency_;
  std::optional<std::uint64_t> pending_nonce_;
  std::int64_t pending_since_ = 0;
};

}  // namespace csense::server
