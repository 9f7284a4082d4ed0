#include "csense/server/matchmaking.hpp"

#include <algorithm>
#include <stdexcept>

namespace csense::server {

void MatchConfig::validate() const {
  if (target < 1 || target > 6) throw std::invalid_argument("target group size must be 1..6");
  if (min_wait_ms < 0 || timeout_ms < 0) throw std::invalid_argument("waiting times must be non-negative");
}

Matchmaker::Matchmaker(MatchConfig config) : config_(config) { config_.validate(); }

bool Matchmaker::accepting(const Room& r, std::int64_t now_ms) const {
  return r.members.size() < config_.target && now_ms < r.opened_ms + config_.timeout_ms;
}

std::optional<std::int64_t> Matchmaker::start_time(const Room& r) const {
  if (r.members.empty()) return std::nullopt;
  std::int64_t ready = 0;
  for (const auto& m : r.members) ready = std::max(ready, m.joined_ms + config_.min_wait_ms);
  if (r.members.size() >= config_.target) return ready;
  return std::max(ready, r.opened_ms + config_.timeout_ms);
}

std::uint64_t Matchmaker::join(std::uint64_t client, std::int64_t now_ms) {
  std::lock_guard lock(mu_);
  for (const auto& r : rooms_)
    for (const auto& m : r.members)
      if (m.client == client) return r.id;
  auto it = std::find_if(rooms_.begin(), rooms_.end(), [&](const Room& r) { return accepting(r, now_ms); });
  if (it == rooms_.end()) {
    rooms_.push_back({next_id_++, now_ms, {}});
    it = std::prev(rooms_.end());
  }
  it->members.push_back({client, now_ms});
  return it->id;
}

bool Matchmaker::leave(std::uint64_t client) {
  std::lock_guard lock(mu_);
  for (auto& r : rooms_) {
    auto it = std::find_if(r.members.begin(), r.members.end(), [&](const Member& m) { return m.client == client; });
    if (it != r.members.end()) {
      r.members.erase(it);
      return true;
    }
  }
  return false;
}

std::vector<StartEvent> Matchmaker::poll(std::int64_t now_ms) {
  std::lock_guard lock(mu_);
  std::vector<StartEvent> out;
  std::vector<Room> keep;
  for (auto& r : rooms_) {
    if (r.members.empty()) {
      // Nobody left to wait for; the next join opens a fresh room.
      ++recycled_;
      continue;
    }
    const auto at = start_time(r);
    if (at && now_ms >= *at) {
      StartEvent e;
      e.room = r.id;
      for (const auto& m : r.members) e.clients.push_back(m.client);
      e.bots = config_.bot_fill ? config_.target - r.members.size() : 0;
      e.at_ms = *at;
      e.timed_out = r.members.size() < config_.target;
      out.push_back(std::move(e));
      continue;
    }
    keep.push_back(std::move(r));
  }
  rooms_ = std::move(keep);
  return out;
}

std::optional<RoomStatus> Matchmaker::status(std::uint64_t client, std::int64_t now_ms) const {
  std::lock_guard lock(mu_);
  for (const auto& r : rooms_)
    for (const auto& m : r.members)
      if (m.client == client) return RoomStatus{r.id, r.members.size(), config_.target, now_ms - m.joined_ms};
  return std::nullopt;
}

std::size_t Matchmaker::rooms() const {
  std::lock_guard lock(mu_);
  return rooms_.size();
}

std::size_t Matchmaker::recycled() const {
  std::lock_guard lock(mu_);
  return recycled_;
}

}  // namespace csense::server
