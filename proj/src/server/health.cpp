#include "csense/server/health.hpp"

namespace csense::server {

std::string_view to_string(RemovalReason r) {
  switch (r) {
    case RemovalReason::hidden_tab: return "hidden-tab";
    case RemovalReason::wall_contact: return "wall-contact";
    case RemovalReason::high_latency: return "high-latency";
    case RemovalReason::disconnected: return "disconnected";
  }
  return "unknown";
}

void ClientHealth::ping_sent(std::uint64_t nonce, std::int64_t now_ms) {
  // An unanswered ping is superseded; the time it stayed open already
  // counted as high latency once it passed the threshold.
  pending_nonce_ = nonce;
  pending_since_ = now_ms;
}

std::optional<std::int64_t> ClientHealth::pong(std::uint64_t nonce, std::int64_t now_ms) {
  if (!pending_nonce_ || *pending_nonce_ != nonce) return std::nullopt;
  pending_nonce_.reset();
  last_latency_ = now_ms - pending_since_;
  return last_latency_;
}

void ClientHealth::on_tick(std::int64_t dt_ms, std::int64_t now_ms, bool wall) {
  if (hidden_) hidden_ms_ += dt_ms;
  wall_ms_ = wall ? wall_ms_ + dt_ms : 0;
  // Slow while the last answer was slow, or while a ping is overdue.
  const bool overdue = pending_nonce_ && now_ms - pending_since_ > rules_.latency_threshold_ms;
  const bool slow = last_latency_ && *last_latency_ > rules_.latency_threshold_ms;
  if (overdue || slow) high_latency_ms_ += dt_ms;
}

std::optional<RemovalReason> ClientHealth::verdict() const {
  if (hidden_ms_ > rules_.hidden_limit_ms) return RemovalReason::hidden_tab;
  if (wall_ms_ >= rules_.wall_limit_ms) return RemovalReason::wall_contact;
  if (high_latency_ms_ > rules_.high_latency_limit_ms) return RemovalReason::high_latency;
  return std::nullopt;
}

}  // namespace csense::server
