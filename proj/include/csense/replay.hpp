#pragma once
// Append-only per-tick record of a session, serialised as JSONL:
//   line 0:  {"version":1,"config":{...},"seed":N}
//   line 1+: {"t":..,"agents":[...],"field":{...},"events":[...]}
// Coordinates and scores carry three decimals. Values are quantised to that
// grid when records are built, so a parsed log equals the in-memory one.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "csense/engine.hpp"

namespace csense {

inline constexpr int kReplayVersion = 1;

class LogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EventKind : std::uint8_t { click, join, drop, intervention, belief };

std::string_view to_string(EventKind k);
EventKind event_kind_from_string(std::string_view s);

struct Event {
  EventKind kind = EventKind::click;
  int agent = -1;
  Point at{};             // click
  std::string label;      // join: seat type; drop: reason; intervention: condition
  std::string phase;      // intervention: "on" | "off"
  int target = -1;        // belief
  double value = 0.0;     // belief posterior

  static Event click(int agent, Point at) { return {EventKind::click, agent, at, {}, {}, -1, 0.0}; }
  static Event join(int agent, std::string seat) {
    return {EventKind::join, agent, {}, std::move(seat), {}, -1, 0.0};
  }
  static Event drop(int agent, std::string reason) {
    return {EventKind::drop, agent, {}, std::move(reason), {}, -1, 0.0};
  }
  static Event intervention(std::string condition, std::string phase) {
    return {EventKind::intervention, -1, {}, std::move(condition), std::move(phase), -1, 0.0};
  }

  friend bool operator==(const Event&, const Event&) = default;
};

struct AgentRecord {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;  // px/s
  KeySet keys{};
  double r = 0.0;
  double score = 0.0;
  bool wall = false;

  static AgentRecord from(const AvatarState& a);
  PublicPose pose() const { return {id, {x, y}, heading, speed}; }
  friend bool operator==(const AgentRecord&, const AgentRecord&) = default;
};

struct TickRecord {
  std::size_t t = 0;
  std::vector<AgentRecord> agents;
  std::vector<Point> field;  // active region centres (private)
  std::vector<Event> events;
  std::vector<AgentRecord> ghosts;  // simulated-but-invisible agents (non-social rounds)

  const AgentRecord* agent(int id) const;
  friend bool operator==(const TickRecord&, const TickRecord&) = default;
};

struct LogHeader {
  int version = kReplayVersion;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
};

struct ReplayLog {
  LogHeader header;
  std::vector<TickRecord> ticks;

  std::string to_jsonl() const;
  static ReplayLog from_jsonl(std::string_view text);
  static ReplayLog load(const std::string& path);
  void save(const std::string& path) const;
};

std::string header_line(const LogHeader& h);
std::string tick_line(const TickRecord& rec);
TickRecord parse_tick(const nlohmann::json& j);

}  // namespace csense
