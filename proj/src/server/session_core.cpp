#include "csense/server/session_core.hpp"

#include <algorithm>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <stdexcept>

namespace csense::server {

namespace {
constexpr std::uint64_t kPracticeStream = 0x7072616374;  // "pract"
constexpr std::int64_t kTickMs = 125;
const std::vector<std::string> kNoTraffic;
}  // namespace

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::waiting: return "waiting";
    case Phase::practice: return "practice";
    case Phase::active: return "active";
    case Phase::ended: return "ended";
  }
  return "unknown";
}

void LiveConfig::validate() const {
  if (game.duration == 0) throw std::invalid_argument("game must last at least one tick");
  if (ping_every == 0) throw std::invalid_argument("ping interval must be at least one tick");
  for (const auto& r : practice) {
    if (r.ticks == 0) throw std::invalid_argument(fmt::format("practice round '{}' has no ticks", r.name));
    const auto& f = r.field ? *r.field : game.field;
    if (f.duration < r.ticks) throw std::invalid_argument(fmt::format("field shorter than round '{}'", r.name));
  }
  if (bot.strategy == StrategyKind::bot_wall || bot.strategy == StrategyKind::bot_center)
    throw std::invalid_argument("back-fill seats need a group strategy, not a scripted bot");
}

std::vector<RoundSpec> default_practice_rounds(std::size_t ticks) {
  std::vector<RoundSpec> out;
  for (int i = 0; i < 4; ++i) out.push_back({fmt::format("practice-{}", i + 1), ticks, i % 2 == 0, std::nullopt});
  return out;
}

void to_json(nlohmann::json& j, const LiveConfig& c) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : c.practice) {
    nlohmann::json e{{"name", r.name}, {"ticks", r.ticks}, {"field_visible", r.field_visible}};
    if (r.field) e["field"] = *r.field;
    rounds.push_back(std::move(e));
  }
  j = nlohmann::json{{"game", c.game},
                     {"practice", std::move(rounds)},
                     {"score_display", c.score_display == ScoreDisplay::percentage ? "percentage" : "points"},
                     {"health",
                      {{"hidden_limit_ms", c.health.hidden_limit_ms},
                       {"wall_limit_ms", c.health.wall_limit_ms},
                       {"latency_threshold_ms", c.health.latency_threshold_ms},
                       {"high_latency_limit_ms", c.health.high_latency_limit_ms}}},
                     {"ping_every", c.ping_every},
                     {"bot", {{"strategy", to_string(c.bot.strategy)}, {"params", c.bot.params}}},
                     {"record_traffic", c.record_traffic}};
}

void from_json(const nlohmann::json& j, LiveConfig& c) {
  const LiveConfig d;
  c = d;
  if (j.contains("game")) {
    nlohmann::json g = j.at("game");
    if (!g.contains("seats")) g["seats"] = nlohmann::json::array();
    c.game = g.get<SessionConfig>();
  }
  c.practice.clear();
  for (const auto& e : j.value("practice", nlohmann::json::array())) {
    RoundSpec r;
    r.name = e.value("name", fmt::format("practice-{}", c.practice.size() + 1));
    r.ticks = e.value("ticks", r.ticks);
    r.field_visible = e.value("field_visible", false);
    if (e.contains("field")) r.field = e.at("field").get<FieldSpec>();
    c.practice.push_back(std::move(r));
  }
  const auto mode = j.value("score_display", std::string{"points"});
  if (mode != "points" && mode != "percentage")
    throw std::invalid_argument(fmt::format("unknown score display '{}'", mode));
  c.score_display = mode == "percentage" ? ScoreDisplay::percentage : ScoreDisplay::points;
  if (j.contains("health")) {
    const auto& h = j.at("health");
    c.health.hidden_limit_ms = h.value("hidden_limit_ms", d.health.hidden_limit_ms);
    c.health.wall_limit_ms = h.value("wall_limit_ms", d.health.wall_limit_ms);
    c.health.latency_threshold_ms = h.value("latency_threshold_ms", d.health.latency_threshold_ms);
    c.health.high_latency_limit_ms = h.value("high_latency_limit_ms", d.health.high_latency_limit_ms);
  }
  c.ping_every = j.value("ping_every", d.ping_every);
  if (j.contains("bot")) {
    const auto& b = j.at("bot");
    c.bot.strategy = strategy_from_string(b.value("strategy", std::string{to_string(d.bot.strategy)}));
    if (b.contains("params")) c.bot.params = b.at("params").get<StrategyParams>();
  }
  c.record_traffic = j.value("record_traffic", false);
}

// ---------------------------------------------------------------------------

struct LiveSession::Seat {
  bool human = false;
  std::uint64_t client = 0;
  std::string name;
  bool connected = false;
  ClientHealth health;
  std::vector<std::string> traffic;
};

struct LiveSession::Round {
  std::string name;
  bool practice = false;
  bool field_visible = false;
  SessionConfig config;
  std::shared_ptr<ScoreField> field;
  LogSink sink;
  std::unique_ptr<SessionRunner> runner;
};

LiveSession::LiveSession(std::string id, LiveConfig config, std::vector<Participant> humans, std::size_t bots,
                         std::uint64_t seed)
    : id_(std::move(id)), config_(std::move(config)), seed_(seed) {
  config_.validate();
  game_config_ = config_.game;
  game_config_.seed = seed;
  game_config_.seats.clear();
  for (const auto& h : humans) {
    Seat s;
    s.human = true;
    s.client = h.client;
    s.name = h.name;
    s.connected = true;
    s.health = ClientHealth(config_.health);
    seats_.push_back(std::move(s));
    game_config_.seats.push_back({StrategyKind::idle, {}, {}, false});
  }
  for (std::size_t i = 0; i < bots; ++i) {
    seats_.emplace_back();
    game_config_.seats.push_back(config_.bot);
  }
  game_config_.validate();
  had_humans_ = !humans.empty();
}

LiveSession::~LiveSession() = default;

std::optional<std::size_t> LiveSession::seat_of(std::uint64_t client) const {
  for (std::size_t i = 0; i < seats_.size(); ++i)
    if (seats_[i].human && seats_[i].client == client) return i;
  return std::nullopt;
}

std::vector<std::uint64_t> LiveSession::clients() const {
  std::vector<std::uint64_t> out;
  for (const auto& s : seats_)
    if (s.human) out.push_back(s.client);
  return out;
}

std::size_t LiveSession::humans_remaining() const {
  return static_cast<std::size_t>(
      std::count_if(seats_.begin(), seats_.end(), [](const Seat& s) { return s.human && s.connected; }));
}

const ReplayLog& LiveSession::game_log() const {
  if (round_ && !round_->practice) return const_cast<Round&>(*round_).sink.log();
  return game_log_;
}

const std::vector<std::string>& LiveSession::traffic(std::uint64_t client) const {
  const auto seat = seat_of(client);
  return seat ? seats_[*seat].traffic : kNoTraffic;
}

void LiveSession::send(std::vector<Outgoing>& out, std::size_t seat, std::string frame) {
  Seat& s = seats_[seat];
  if (!s.human || !s.connected) return;
  if (config_.record_traffic) s.traffic.push_back(frame);
  out.push_back({s.client, std::move(frame)});
}

void LiveSession::receive(std::uint64_t client, const ClientFrame& frame, std::int64_t now_ms) {
  const auto seat = seat_of(client);
  if (!seat || !seats_[*seat].connected || ended()) return;
  Seat& s = seats_[*seat];
  if (const auto* in = std::get_if<InputFrame>(&frame)) {
    if (round_) pending_.push_back({*seat, in->input});
  } else if (const auto* v = std::get_if<VisibilityFrame>(&frame)) {
    s.health.set_hidden(v->hidden);
  } else if (const auto* p = std::get_if<PongFrame>(&frame)) {
    s.health.pong(p->nonce, now_ms);
  }
}

void LiveSession::disconnect(std::uint64_t client, std::int64_t now_ms) {
  (void)now_ms;
  const auto seat = seat_of(client);
  if (!seat || !seats_[*seat].connected) return;
  std::vector<Outgoing> ignored;
  remove(*seat, RemovalReason::disconnected, ignored);
}

void LiveSession::remove(std::size_t seat, RemovalReason reason, std::vector<Outgoing>& out) {
  Seat& s = seats_[seat];
  if (!s.connected) return;
  if (reason != RemovalReason::disconnected) send(out, seat, removed_frame(to_string(reason)));
  s.connected = false;
  const std::string why(to_string(reason));
  std::size_t t = 0;
  std::string round;
  if (round_) {
    round_->runner->remove_seat(seat, why);
    t = round_->runner->world().tick();
    round = round_->name;
  }
  removals_.push_back({seat, why, round, t});
  pending_.erase(std::remove_if(pending_.begin(), pending_.end(),
                                [&](const ExternalInput& x) { return x.seat == seat; }),
                 pending_.end());
}

nlohmann::json LiveSession::config_public(std::size_t seat) const {
  const auto& c = round_->config;
  return {{"session", id_},
          {"round", round_->name},
          {"seat", seat},
          {"ticks", c.duration},
          {"tick_ms", kTickMs},
          {"scheme", to_string(c.scheme.kind)},
          {"arena", {{"width", c.arena.width}, {"height", c.arena.height}}},
          {"field_visible", round_->field_visible},
          {"display", config_.score_display == ScoreDisplay::percentage ? "percentage" : "points"},
          {"group_size", c.group_size()}};
}

void LiveSession::begin_round(std::vector<Outgoing>& out) {
  auto r = std::make_unique<Round>();
  if (in_practice()) {
    const RoundSpec& spec = config_.practice[round_index_];
    r->name = spec.name;
    r->practice = true;
    r->field_visible = spec.field_visible;
    r->config = game_config_;
    r->config.duration = spec.ticks;
    if (spec.field) r->config.field = *spec.field;
    r->config.seed = derive_seed(seed_, {kPracticeStream, round_index_});
    phase_ = Phase::practice;
  } else {
    r->name = "game";
    r->config = game_config_;
    phase_ = Phase::active;
  }
  r->field = std::make_shared<ScoreField>(ScoreField::build(r->config.field, r->config.arena));
  auto strategies = build_strategies(r->config);
  std::vector<std::string> labels = default_seat_labels(r->config);
  for (std::size_t i = 0; i < seats_.size(); ++i) {
    if (!seats_[i].human) continue;
    strategies[i].reset();
    labels[i] = "human";
  }
  r->runner = std::make_unique<SessionRunner>(r->config, r->field, std::move(strategies), &r->sink);
  r->runner->start(labels);
  // Seats removed in an earlier round stay out.
  for (std::size_t i = 0; i < seats_.size(); ++i)
    if (seats_[i].human && !seats_[i].connected) r->runner->remove_seat(i, "removed");
  round_ = std::move(r);
  for (std::size_t i = 0; i < seats_.size(); ++i) send(out, i, phase_frame(to_string(phase_), config_public(i)));
}

void LiveSession::end_round(std::vector<Outgoing>& out) {
  if (round_->practice) {
    practice_logs_.push_back(round_->sink.take());
    round_.reset();
    ++round_index_;
    return;
  }
  finish(out, false);
}

void LiveSession::finish(std::vector<Outgoing>& out, bool early) {
  if (round_) {
    round_->runner->finish();
    if (round_->practice) {
      practice_logs_.push_back(round_->sink.take());
    } else {
      game_log_ = round_->sink.take();
      for (std::size_t i = 0; i < seats_.size(); ++i)
        send(out, i, end_frame(round_->runner->world().avatar(i).score));
    }
    round_.reset();
  }
  ended_early_ = early;
  phase_ = Phase::ended;
  pending_.clear();
}

StateView LiveSession::view(std::size_t seat) const {
  const World& w = round_->runner->world();
  const AvatarState& a = w.avatar(seat);
  StateView v;
  v.t = w.tick() - 1;
  v.self.x = a.pos.x;
  v.self.y = a.pos.y;
  v.self.heading = a.heading;
  v.self.speed = a.speed_px_s();
  v.self.r = a.reward;
  const double halo_level = StrategyParams{}.exploit_level(w.field().graded());
  v.self.halo = a.reward > halo_level;
  v.self.wall = a.wall;
  v.self.score_display = format_score(config_.score_display, a.score, a.reward);
  for (std::size_t i = 0; i < w.seats(); ++i) {
    if (i == seat || !w.active(i) || w.ghost(i)) continue;
    const AvatarState& o = w.avatar(i);
    v.others.push_back({o.id, o.pos.x, o.pos.y, o.heading});
  }
  if (round_->practice && round_->field_visible) v.field = w.field().centers(v.t);
  return v;
}

std::vector<Outgoing> LiveSession::tick(std::int64_t now_ms) {
  std::vector<Outgoing> out;
  if (ended()) return out;
  if (started_ms_ < 0) started_ms_ = now_ms;
  if (!round_) begin_round(out);

  round_->runner->tick(pending_);
  pending_.clear();
  const World& w = round_->runner->world();
  const std::size_t t = w.tick() - 1;

  for (std::size_t i = 0; i < seats_.size(); ++i) {
    Seat& s = seats_[i];
    if (!s.human || !s.connected) continue;
    s.health.on_tick(kTickMs, now_ms, w.avatar(i).wall);
    if (const auto why = s.health.verdict()) remove(i, *why, out);
  }
  for (std::size_t i = 0; i < seats_.size(); ++i)
    if (seats_[i].human && seats_[i].connected) send(out, i, state_frame(view(i)));
  if (t % config_.ping_every == 0) {
    for (std::size_t i = 0; i < seats_.size(); ++i) {
      if (!seats_[i].human || !seats_[i].connected) continue;
      const std::uint64_t nonce = next_nonce_++;
      seats_[i].health.ping_sent(nonce, now_ms);
      send(out, i, ping_frame(nonce));
    }
  }

  if (had_humans_ && humans_remaining() == 0) {
    finish(out, true);
  } else if (round_->runner->finished()) {
    end_round(out);
  }
  if (ended()) ended_ms_ = now_ms;
  return out;
}

nlohmann::json LiveSession::index_entry() const {
  nlohmann::json removed = nlohmann::json::array();
  for (const auto& r : removals_)
    removed.push_back({{"seat", r.seat}, {"reason", r.reason}, {"round", r.round}, {"t", r.t}});
  std::size_t humans = 0;
  for (const auto& s : seats_) humans += s.human ? 1 : 0;
  return {{"id", id_},
          {"seed", seed_},
          {"phase", to_string(phase_)},
          {"ended_early", ended_early_},
          {"humans", humans},
          {"bots", seats_.size() - humans},
          {"game_ticks", game_log().ticks.size()},
          {"practice_rounds", practice_logs_.size()},
          {"started_ms", started_ms_},
          {"ended_ms", ended_ms_},
          {"removed", std::move(removed)}};
}

std::string persist_session(const LiveSession& s, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path game = fs::path(dir) / (s.id() + ".jsonl");
  s.game_log().save(game.string());
  nlohmann::json entry = s.index_entry();
  entry["log"] = game.filename().string();
  nlohmann::json practice = nlohmann::json::array();
  for (std::size_t i = 0; i < s.practice_logs().size(); ++i) {
    const fs::path p = fs::path(dir) / fmt::format("{}.practice-{}.jsonl", s.id(), i + 1);
    s.practice_logs()[i].save(p.string());
    practice.push_back(p.filename().string());
  }
  entry["practice_logs"] = std::move(practice);
  std::ofstream index(fs::path(dir) / "sessions.jsonl", std::ios::app);
  if (!index) throw std::runtime_error(fmt::format("cannot append to {}/sessions.jsonl", dir));
  index << entry.dump() << '\n';
  return game.string();
}

}  // namespace csense::server
