#include "csense/replay.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace csense {

namespace {

double q3(double v) {
  const double r = quantize_milli(v);
  return r == 0.0 ? 0.0 : r;  // no "-0.000"
}

void append_keys(std::string& out, KeySet keys) {
  out += '[';
  bool first = true;
  for (auto k : {Key::a, Key::s, Key::left, Key::right, Key::space}) {
    if (!keys.has(k)) continue;
    if (!first) out += ',';
    first = false;
    out += '"';
    out += to_string(k);
    out += '"';
  }
  out += ']';
}

void append_agent(std::string& out, const AgentRecord& a) {
  out += fmt::format(R"({{"id":{},"x":{:.3f},"y":{:.3f},"heading":{:.3f},"speed":{:.3f},"keys":)",
                     a.id, a.x, a.y, a.heading, a.speed);
  append_keys(out, a.keys);
  out += fmt::format(R"(,"r":{:.3f},"score":{:.3f},"wall":{}}})", a.r, a.score, a.wall);
}

void append_event(std::string& out, const Event& e) {
  switch (e.kind) {
    case EventKind::click:
      out += fmt::format(R"({{"kind":"click","id":{},"x":{:.3f},"y":{:.3f}}})", e.agent, q3(e.at.x),
                         q3(e.at.y));
      break;
    case EventKind::join:
      out += fmt::format(R"({{"kind":"join","id":{},"seat":{}}})", e.agent,
                         nlohmann::json(e.label).dump());
      break;
    case EventKind::drop:
      out += fmt::format(R"({{"kind":"drop","id":{},"reason":{}}})", e.agent,
                         nlohmann::json(e.label).dump());
      break;
    case EventKind::intervention:
      out += fmt::format(R"({{"kind":"intervention","condition":{},"phase":{}}})",
                         nlohmann::json(e.label).dump(), nlohmann::json(e.phase).dump());
      break;
    case EventKind::belief:
      out += fmt::format(R"({{"kind":"belief","id":{},"target":{},"p":{:.3f}}})", e.agent, e.target,
                         e.value);
      break;
  }
}

AgentRecord parse_agent(const nlohmann::json& j) {
  AgentRecord a;
  a.id = j.at("id").get<int>();
  a.x = j.at("x").get<double>();
  a.y = j.at("y").get<double>();
  a.heading = j.at("heading").get<double>();
  a.speed = j.at("speed").get<double>();
  for (const auto& k : j.at("keys")) a.keys.set(key_from_string(k.get<std::string>()), true);
  a.r = j.at("r").get<double>();
  a.score = j.at("score").get<double>();
  a.wall = j.at("wall").get<bool>();
  return a;
}

Event parse_event(const nlohmann::json& j) {
  Event e;
  e.kind = event_kind_from_string(j.at("kind").get<std::string>());
  switch (e.kind) {
    case EventKind::click:
      e.agent = j.at("id").get<int>();
      e.at = {j.at("x").get<double>(), j.at("y").get<double>()};
      break;
    case EventKind::join:
      e.agent = j.at("id").get<int>();
      e.label = j.at("seat").get<std::string>();
      break;
    case EventKind::drop:
      e.agent = j.at("id").get<int>();
      e.label = j.at("reason").get<std::string>();
      break;
    case EventKind::intervention:
      e.label = j.at("condition").get<std::string>();
      e.phase = j.at("phase").get<std::string>();
      break;
    case EventKind::belief:
      e.agent = j.at("id").get<int>();
      e.target = j.at("target").get<int>();
      e.value = j.at("p").get<double>();
      break;
  }
  return e;
}

}  // namespace

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::click: return "click";
    case EventKind::join: return "join";
    case EventKind::drop: return "drop";
    case EventKind::intervention: return "intervention";
    case EventKind::belief: return "belief";
  }
  return "?";
}

EventKind event_kind_from_string(std::string_view s) {
  for (auto k : {EventKind::click, EventKind::join, EventKind::drop, EventKind::intervention,
                 EventKind::belief})
    if (to_string(k) == s) return k;
  throw LogError(fmt::format("unknown event kind '{}'", s));
}

AgentRecord AgentRecord::from(const AvatarState& a) {
  AgentRecord r;
  r.id = a.id;
  r.x = q3(a.pos.x);
  r.y = q3(a.pos.y);
  r.heading = q3(a.heading);
  r.speed = q3(a.speed_px_s());
  r.keys = a.keys;
  r.r = q3(a.reward);
  r.score = q3(a.score);
  r.wall = a.wall;
  return r;
}

const AgentRecord* TickRecord::agent(int id) const {
  for (const auto& a : agents)
    if (a.id == id) return &a;
  return nullptr;
}

std::string header_line(const LogHeader& h) {
  nlohmann::json j;
  j["version"] = h.version;
  j["config"] = h.config;
  j["seed"] = h.seed;
  return j.dump();
}

std::string tick_line(const TickRecord& rec) {
  std::string out;
  out.reserve(96 + rec.agents.size() * 128);
  out += fmt::format(R"({{"t":{},"agents":[)", rec.t);
  for (std::size_t i = 0; i < rec.agents.size(); ++i) {
    if (i) out += ',';
    append_agent(out, rec.agents[i]);
  }
  out += R"(],"field":)";
  if (rec.field.empty()) {
    out += "{}";
  } else if (rec.field.size() == 1) {
    out += fmt::format(R"({{"cx":{:.3f},"cy":{:.3f}}})", q3(rec.field[0].x), q3(rec.field[0].y));
  } else {
    out += R"({"centers":[)";
    for (std::size_t i = 0; i < rec.field.size(); ++i) {
      if (i) out += ',';
      out += fmt::format(R"({{"cx":{:.3f},"cy":{:.3f}}})", q3(rec.field[i].x), q3(rec.field[i].y));
    }
    out += "]}";
  }
  out += R"(,"events":[)";
  for (std::size_t i = 0; i < rec.events.size(); ++i) {
    if (i) out += ',';
    append_event(out, rec.events[i]);
  }
  out += ']';
  if (!rec.ghosts.empty()) {
    out += R"(,"ghosts":[)";
    for (std::size_t i = 0; i < rec.ghosts.size(); ++i) {
      if (i) out += ',';
      append_agent(out, rec.ghosts[i]);
    }
    out += ']';
  }
  out += '}';
  return out;
}

TickRecord parse_tick(const nlohmann::json& j) {
  TickRecord rec;
  rec.t = j.at("t").get<std::size_t>();
  for (const auto& a : j.at("agents")) rec.agents.push_back(parse_agent(a));
  const auto& f = j.at("field");
  if (f.contains("centers")) {
    for (const auto& c : f.at("centers")) rec.field.push_back({c.at("cx").get<double>(), c.at("cy").get<double>()});
  } else if (f.contains("cx")) {
    rec.field.push_back({f.at("cx").get<double>(), f.at("cy").get<double>()});
  }
  for (const auto& e : j.at("events")) rec.events.push_back(parse_event(e));
  if (j.contains("ghosts"))
    for (const auto& a : j.at("ghosts")) rec.ghosts.push_back(parse_agent(a));
  return rec;
}

std::string ReplayLog::to_jsonl() const {
  std::string out = header_line(header);
  out += '\n';
  for (const auto& t : ticks) {
    out += tick_line(t);
    out += '\n';
  }
  return out;
}

ReplayLog ReplayLog::from_jsonl(std::string_view text) {
  ReplayLog log;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw LogError(fmt::format("line {}: {}", line_no + 1, e.what()));
    }
    try {
      if (line_no == 0) {
        log.header.version = j.at("version").get<int>();
        if (log.header.version != kReplayVersion)
          throw LogError(fmt::format("unsupported log version {}", log.header.version));
        log.header.config = j.at("config");
        log.header.seed = j.at("seed").get<std::uint64_t>();
      } else {
        log.ticks.push_back(parse_tick(j));
      }
    } catch (const nlohmann::json::exception& e) {
      throw LogError(fmt::format("line {}: {}", line_no + 1, e.what()));
    }
    ++line_no;
  }
  if (line_no == 0) throw LogError("empty replay log");
  return log;
}

ReplayLog ReplayLog::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogError(fmt::format("cannot open {}", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return from_jsonl(ss.str());
}

void ReplayLog::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LogError(fmt::format("cannot write {}", path));
  out << to_jsonl();
}

}  // namespace csense
