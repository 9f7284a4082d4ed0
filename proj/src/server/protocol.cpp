#include "csense/server/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <initializer_list>

namespace csense::server {

namespace {

using nlohmann::json;

const json& member(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ProtocolError(fmt::format("missing '{}'", key));
  return *it;
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return member(j, key).get<T>();
  } catch (const json::exception& e) {
    throw ProtocolError(fmt::format("bad '{}': {}", key, e.what()));
  }
}

double finite(const json& j, const char* key) {
  const double v = get<double>(j, key);
  if (!std::isfinite(v)) throw ProtocolError(fmt::format("'{}' is not finite", key));
  return v;
}

}  // namespace

ClientFrame parse_client_frame(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProtocolError(fmt::format("not JSON: {}", e.what()));
  }
  if (!j.is_object()) throw ProtocolError("frame is not an object");
  const auto type = get<std::string>(j, "type");
  if (type == "join") return JoinFrame{j.value("name", std::string{})};
  if (type == "visibility") return VisibilityFrame{get<bool>(j, "hidden")};
  if (type == "pong") {
    if (!member(j, "nonce").is_number_unsigned()) throw ProtocolError("bad 'nonce': not an unsigned integer");
    return PongFrame{j["nonce"].get<std::uint64_t>()};
  }
  if (type == "input") {
    InputFrame f;
    f.t = j.value("t", std::size_t{0});
    const auto kind = get<std::string>(j, "kind");
    if (kind == "click") {
      f.input = Input::click({finite(j, "x"), finite(j, "y")});
    } else if (kind == "key") {
      Key k;
      try {
        k = key_from_string(get<std::string>(j, "key"));
      } catch (const InputError& e) {
        throw ProtocolError(e.what());
      }
      const auto action = get<std::string>(j, "action");
      if (action != "down" && action != "up") throw ProtocolError(fmt::format("unknown key action '{}'", action));
      f.input = action == "down" ? Input::press(k) : Input::release(k);
    } else {
      throw ProtocolError(fmt::format("unknown input kind '{}'", kind));
    }
    return f;
  }
  throw ProtocolError(fmt::format("unknown frame type '{}'", type));
}

std::string serialize(const ClientFrame& f) {
  json j = std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, JoinFrame>) {
          return {{"type", "join"}, {"name", v.name}};
        } else if constexpr (std::is_same_v<T, VisibilityFrame>) {
          return {{"type", "visibility"}, {"hidden", v.hidden}};
        } else if constexpr (std::is_same_v<T, PongFrame>) {
          return {{"type", "pong"}, {"nonce", v.nonce}};
        } else {
          json o{{"type", "input"}, {"t", v.t}};
          if (v.input.kind == Input::Kind::click) {
            o["kind"] = "click";
            o["x"] = v.input.at.x;
            o["y"] = v.input.at.y;
          } else {
            o["kind"] = "key";
            o["key"] = to_string(v.input.key);
            o["action"] = v.input.down ? "down" : "up";
          }
          return o;
        }
      },
      f);
  return j.dump();
}

std::string waiting_frame(std::size_t present, std::size_t target, std::int64_t elapsed_ms) {
  return json{{"type", "waiting"}, {"present", present}, {"target", target}, {"elapsed_ms", elapsed_ms}}.dump();
}

std::string phase_frame(std::string_view phase, const nlohmann::json& config_public) {
  return json{{"type", "phase"}, {"phase", phase}, {"config_public", config_public}}.dump();
}

std::string state_frame(const StateView& s) {
  json others = json::array();
  for (const auto& o : s.others) others.push_back({{"id", o.id}, {"x", o.x}, {"y", o.y}, {"heading", o.heading}});
  json j{{"type", "state"},
         {"t", s.t},
         {"self",
          {{"x", s.self.x},
           {"y", s.self.y},
           {"heading", s.self.heading},
           {"speed", s.self.speed},
           {"r", s.self.r},
           {"halo", s.self.halo},
           {"wall", s.self.wall},
           {"score_display", s.self.score_display}}},
         {"others", std::move(others)}};
  if (s.field) {
    json f = json::array();
    for (const auto& p : *s.field) f.push_back({{"x", p.x}, {"y", p.y}});
    j["field"] = std::move(f);
  }
  return j.dump();
}

std::string ping_frame(std::uint64_t nonce) { return json{{"type", "ping"}, {"nonce", nonce}}.dump(); }

std::string removed_frame(std::string_view reason) { return json{{"type", "removed"}, {"reason", reason}}.dump(); }

std::string end_frame(double total_score) {
  return json{{"type", "end"}, {"total_score", std::round(total_score * 1000.0) / 1000.0}}.dump();
}

std::string format_score(ScoreDisplay mode, double score, double r) {
  if (mode == ScoreDisplay::percentage) return fmt::format("{:.0f}%", std::clamp(r, 0.0, 1.0) * 100.0);
  return fmt::format("{:.0f}", std::floor(score));
}

// Privacy -----------------------------------------------------------------------

namespace {

constexpr std::initializer_list<const char*> kPrivateKeys = {"r", "halo", "score", "score_display", "reward",
                                                             "total_score", "wall"};

bool is_private(const std::string& k) {
  return std::any_of(kPrivateKeys.begin(), kPrivateKeys.end(), [&](const char* p) { return k == p; });
}

struct Scanner {
  std::vector<PrivacyViolation>& out;
  std::size_t frame;

  void flag(std::string path, std::string detail) { out.push_back({frame, std::move(path), std::move(detail)}); }

  void exact_keys(const json& j, const std::string& path, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional = {}) {
    if (!j.is_object()) {
      flag(path, "expected an object");
      return;
    }
    for (const char* k : required)
      if (!j.contains(k)) flag(path + "/" + k, "missing member");
    for (const auto& [k, v] : j.items()) {
      const auto match = [&](const char* a) { return k == a; };
      if (std::none_of(required.begin(), required.end(), match) &&
          std::none_of(optional.begin(), optional.end(), match))
        flag(path + "/" + k, "member not in schema");
    }
  }

  // Anywhere outside the recipient's own block.
  void no_private(const json& j, const std::string& path) {
    if (j.is_object()) {
      for (const auto& [k, v] : j.items()) {
        if (is_private(k)) flag(path + "/" + k, "private member outside the own block");
        no_private(v, path + "/" + k);
      }
    } else if (j.is_array()) {
      for (std::size_t i = 0; i < j.size(); ++i) no_private(j[i], fmt::format("{}/{}", path, i));
    }
  }

  void scan(const json& j) {
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
      flag("", "frame without a type");
      return;
    }
    const auto type = j["type"].get<std::string>();
    if (type == "waiting") {
      exact_keys(j, "", {"type", "present", "target", "elapsed_ms"});
    } else if (type == "phase") {
      exact_keys(j, "", {"type", "phase", "config_public"});
      if (j.contains("config_public")) no_private(j["config_public"], "/config_public");
    } else if (type == "state") {
      exact_keys(j, "", {"type", "t", "self", "others"}, {"field"});
      if (j.contains("self"))
        exact_keys(j["self"], "/self", {"x", "y", "heading", "speed", "r", "halo", "wall", "score_display"});
      if (j.contains("others")) {
        const auto& o = j["others"];
        if (!o.is_array()) {
          flag("/others", "expected an array");
        } else {
          for (std::size_t i = 0; i < o.size(); ++i)
            exact_keys(o[i], fmt::format("/others/{}", i), {"id", "x", "y", "heading"});
        }
      }
      if (j.contains("field")) no_private(j["field"], "/field");
    } else if (type == "ping") {
      exact_keys(j, "", {"type", "nonce"});
    } else if (type == "removed") {
      exact_keys(j, "", {"type", "reason"});
    } else if (type == "end") {
      exact_keys(j, "", {"type", "total_score"});
    } else {
      flag("/type", fmt::format("unknown frame type '{}'", type));
    }
  }
};

}  // namespace

std::vector<PrivacyViolation> privacy_scan(const std::vector<std::string>& frames) {
  std::vector<PrivacyViolation> out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    Scanner s{out, i};
    json j;
    try {
      j = json::parse(frames[i]);
    } catch (const json::parse_error&) {
      s.flag("", "not JSON");
      continue;
    }
    s.scan(j);
  }
  return out;
}

}  // namespace csense::server
