#include "csense/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "csense/replay.hpp"

namespace csense {

namespace {

// Logged speeds and headings carry three decimals.
constexpr double kSpeedTol = 1e-6;
constexpr double kTurnTol = 0.01;

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool slow_displacement(std::span<const PublicPose> history, const ClassifierParams& params) {
  const std::size_t w = params.slow_window;
  if (history.size() < w + 1) return false;
  const auto tail = history.subspan(history.size() - w);
  for (const auto& p : tail)
    if (!near(p.speed, params.slow_speed, kSpeedTol)) return false;
  const double possible = static_cast<double>(w) * params.slow_speed / kTicksPerSecond;
  const double net = distance(history[history.size() - w - 1].pos, history.back().pos);
  return net < params.displacement_fraction * possible;
}

std::optional<int> copy_target(std::span<const PublicPose> history,
                               std::span<const std::vector<PublicPose>> others_recent,
                               const ClassifierParams& params) {
  const std::size_t w = params.copy_window;
  if (history.size() < w + 1 || others_recent.size() < w) return std::nullopt;
  const auto tail = history.subspan(history.size() - w);
  const auto others = others_recent.subspan(others_recent.size() - w);

  double turned = 0.0;
  for (std::size_t i = 0; i < w; ++i) {
    if (!near(tail[i].speed, params.fast_speed, kSpeedTol)) return std::nullopt;
    const PublicPose& prev = history[history.size() - w - 1 + i];
    turned += std::abs(wrap_degrees(tail[i].heading - prev.heading));
  }
  if (turned > params.straight_tolerance + kTurnTol) return std::nullopt;

  std::optional<int> best;
  double best_off = 0.0;
  for (const auto& cand : others.back()) {
    double off_last = 0.0;
    bool inside = true;
    for (std::size_t i = 0; i < w && inside; ++i) {
      const auto it = std::find_if(others[i].begin(), others[i].end(),
                                   [&](const PublicPose& p) { return p.id == cand.id; });
      if (it == others[i].end() || it->pos == tail[i].pos) {
        inside = false;
        break;
      }
      const double off = std::abs(wrap_degrees(degrees_toward(tail[i].pos, it->pos) - tail[i].heading));
      inside = off <= params.cone_half_angle;
      off_last = off;
    }
    if (!inside) continue;
    if (!best || off_last < best_off || (off_last == best_off && cand.id < *best)) {
      best = cand.id;
      best_off = off_last;
    }
  }
  return best;
}

}  // namespace

std::string_view to_string(State s) {
  switch (s) {
    case State::exploring: return "exploring";
    case State::exploiting: return "exploiting";
    case State::copying: return "copying";
  }
  return "?";
}

State state_from_string(std::string_view s) {
  for (auto k : {State::exploring, State::exploiting, State::copying})
    if (to_string(k) == s) return k;
  throw std::invalid_argument(fmt::format("unknown state '{}'", s));
}

void ClassifierParams::validate() const {
  if (spin_window < 1 || slow_window < 1 || copy_window < 1)
    throw std::invalid_argument("classifier windows must be at least one tick");
  if (!(displacement_fraction > 0.0 && displacement_fraction < 1.0))
    throw std::invalid_argument("displacement fraction must lie in (0,1)");
  if (!(cone_half_angle > 0.0 && cone_half_angle <= 180.0))
    throw std::invalid_argument("cone half-angle must lie in (0,180]");
}

bool detect_spinning(std::span<const PublicPose> window, const ClassifierParams& params) {
  const std::size_t w = params.spin_window;
  if (window.size() < w + 1) return false;
  const auto win = window.subspan(window.size() - w - 1);
  int sign = 0;
  for (std::size_t i = 1; i <= w; ++i) {
    if (!near(win[i].speed, params.slow_speed, kSpeedTol)) return false;
    const double d = wrap_degrees(win[i].heading - win[i - 1].heading);
    int s = 0;
    if (near(d, params.turn_quantum, kTurnTol)) s = 1;
    else if (near(d, -params.turn_quantum, kTurnTol)) s = -1;
    if (s == 0 || (sign != 0 && s != sign)) return false;
    sign = s;
  }
  return true;
}

StateLabel classify_tick(std::span<const PublicPose> history,
                         std::span<const std::vector<PublicPose>> others_recent,
                         const ClassifierParams& params) {
  if (history.size() < params.slow_window + 1) return {};
  if (detect_spinning(history, params) || slow_displacement(history, params))
    return {State::exploiting, -1};
  if (auto j = copy_target(history, others_recent, params)) return {State::copying, *j};
  return {};
}

std::vector<LabelRecord> classify_log(const ReplayLog& log, const ClassifierParams& params) {
  params.validate();
  std::vector<LabelRecord> out;
  std::map<int, std::vector<PublicPose>> histories;
  std::vector<std::vector<PublicPose>> recent;  // all visible poses, last copy_window ticks
  std::vector<std::vector<PublicPose>> others;

  const std::size_t keep = std::max({params.slow_window, params.spin_window, params.copy_window}) + 1;
  std::optional<std::size_t> last_t;
  for (const auto& tick : log.ticks) {
    // A gap in the tick sequence breaks every trailing window.
    if (last_t && tick.t != *last_t + 1) {
      histories.clear();
      recent.clear();
    }
    last_t = tick.t;

    std::vector<PublicPose> poses;
    poses.reserve(tick.agents.size());
    for (const auto& a : tick.agents) poses.push_back(a.pose());
    recent.push_back(poses);
    if (recent.size() > params.copy_window) recent.erase(recent.begin());

    for (auto it = histories.begin(); it != histories.end();) {
      if (!tick.agent(it->first)) it = histories.erase(it);
      else ++it;
    }

    for (const auto& self : poses) {
      auto& h = histories[self.id];
      h.push_back(self);
      if (h.size() > keep) h.erase(h.begin());

      others.resize(recent.size());
      for (std::size_t i = 0; i < recent.size(); ++i) {
        others[i].clear();
        for (const auto& p : recent[i])
          if (p.id != self.id) others[i].push_back(p);
      }
      out.push_back({tick.t, self.id, classify_tick(h, others, params)});
    }
  }
  return out;
}

std::string labels_to_jsonl(std::span<const LabelRecord> labels) {
  std::string out;
  out.reserve(labels.size() * 48);
  for (const auto& l : labels) {
    if (l.label.state == State::copying)
      out += fmt::format(R"({{"t":{},"id":{},"state":"{}","target":{}}})", l.t, l.agent,
                         to_string(l.label.state), l.label.target);
    else
      out += fmt::format(R"({{"t":{},"id":{},"state":"{}"}})", l.t, l.agent, to_string(l.label.state));
    out += '\n';
  }
  return out;
}

std::vector<LabelRecord> labels_from_jsonl(const std::string& text) {
  std::vector<LabelRecord> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LabelRecord r;
      r.t = j.at("t").get<std::size_t>();
      r.agent = j.at("id").get<int>();
      r.label.state = state_from_string(j.at("state").get<std::string>());
      if (r.label.state == State::copying) r.label.target = j.at("target").get<int>();
      out.push_back(r);
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("label line {}: {}", line_no, e.what()));
    }
  }
  return out;
}

}  // namespace csense
