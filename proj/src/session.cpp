#include "csense/session.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace csense {

namespace {

constexpr double kPlacementInset = 20.0;
constexpr std::uint64_t kPlacementStream = 0x706c616365;  // "place"
constexpr std::uint64_t kSeatStream = 7;

bool is_bot(StrategyKind k) { return k == StrategyKind::bot_wall || k == StrategyKind::bot_center; }

}  // namespace

std::size_t SessionConfig::group_size() const {
  return static_cast<std::size_t>(
      std::count_if(seats.begin(), seats.end(), [](const SeatConfig& s) { return !s.ghost; }));
}

void SessionConfig::validate() const {
  if (seats.empty()) throw std::invalid_argument("session needs at least one seat");
  if (seats.size() > kMaxGroupSize)
    throw std::invalid_argument(fmt::format("at most {} seats per session", kMaxGroupSize));
  if (duration == 0) throw std::invalid_argument("session duration must be positive");
  if (!(arena.width > 0.0 && arena.height > 0.0)) throw std::invalid_argument("arena must be non-empty");
  field.validate();
  if (field.duration < duration)
    throw std::invalid_argument(
        fmt::format("field lasts {} ticks, session needs {}", field.duration, duration));
  for (const auto& s : seats) {
    s.params.validate();
    for (int p : s.peers)
      if (p < 0 || static_cast<std::size_t>(p) >= seats.size())
        throw std::invalid_argument(fmt::format("peer id {} out of range", p));
  }
}

void to_json(nlohmann::json& j, const FieldSpec& f) {
  j = nlohmann::json{{"kind", to_string(f.kind)},
                     {"noise_weight", f.noise_weight},
                     {"duration", f.duration},
                     {"seed", f.seed},
                     {"speed", f.speed},
                     {"noise",
                      {{"cell_size", f.noise.cell_size},
                       {"rho", f.noise.rho},
                       {"sigma", f.noise.sigma},
                       {"seed", f.noise.seed}}}};
  if (!f.components.empty()) j["components"] = f.components;
}

void from_json(const nlohmann::json& j, FieldSpec& f) {
  FieldSpec d;
  f.kind = field_kind_from_string(j.at("kind").get<std::string>());
  f.noise_weight = j.value("noise_weight", d.noise_weight);
  f.duration = j.value("duration", d.duration);
  f.seed = j.value("seed", d.seed);
  f.speed = j.value("speed", d.speed);
  f.noise = d.noise;
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    f.noise.cell_size = n.value("cell_size", d.noise.cell_size);
    f.noise.rho = n.value("rho", d.noise.rho);
    f.noise.sigma = n.value("sigma", d.noise.sigma);
    f.noise.seed = n.value("seed", d.noise.seed);
  }
  f.components.clear();
  if (j.contains("components")) f.components = j.at("components").get<std::vector<FieldSpec>>();
}

void to_json(nlohmann::json& j, const SessionConfig& c) {
  nlohmann::json seats = nlohmann::json::array();
  for (const auto& s : c.seats) {
    nlohmann::json e{{"strategy", to_string(s.strategy)}, {"params", s.params}};
    if (!s.peers.empty()) e["peers"] = s.peers;
    if (s.ghost) e["ghost"] = true;
    seats.push_back(std::move(e));
  }
  j = nlohmann::json{{"arena", {{"width", c.arena.width}, {"height", c.arena.height}}},
                     {"field", c.field},
                     {"field_id", c.field_id},
                     {"duration", c.duration},
                     {"scheme",
                      {{"kind", to_string(c.scheme.kind)},
                       {"turn_rate", c.scheme.turn_rate},
                       {"stop_allowed", c.scheme.stop_allowed}}},
                     {"seats", std::move(seats)},
                     {"seed", c.seed}};
  if (c.log_beliefs) j["log_beliefs"] = true;
}

void from_json(const nlohmann::json& j, SessionConfig& c) {
  SessionConfig d;
  c.arena = d.arena;
  if (j.contains("arena")) {
    c.arena.width = j.at("arena").value("width", d.arena.width);
    c.arena.height = j.at("arena").value("height", d.arena.height);
  }
  c.field = j.at("field").get<FieldSpec>();
  c.field_id = j.value("field_id", d.field_id);
  c.duration = j.value("duration", c.field.duration);
  c.scheme = d.scheme;
  if (j.contains("scheme")) {
    const auto& s = j.at("scheme");
    c.scheme = ControlScheme::of(scheme_from_string(s.at("kind").get<std::string>()));
    c.scheme.turn_rate = s.value("turn_rate", c.scheme.turn_rate);
    c.scheme.stop_allowed = s.value("stop_allowed", c.scheme.stop_allowed);
  }
  c.seats.clear();
  for (const auto& e : j.at("seats")) {
    SeatConfig s;
    s.strategy = strategy_from_string(e.at("strategy").get<std::string>());
    if (e.contains("params")) s.params = e.at("params").get<StrategyParams>();
    if (e.contains("peers")) s.peers = e.at("peers").get<std::vector<int>>();
    s.ghost = e.value("ghost", false);
    c.seats.push_back(std::move(s));
  }
  c.seed = j.value("seed", d.seed);
  c.log_beliefs = j.value("log_beliefs", false);
}

std::vector<SeatConfig> homogeneous_seats(StrategyKind kind, const StrategyParams& params, std::size_t n) {
  return std::vector<SeatConfig>(n, SeatConfig{kind, params, {}, false});
}

// ---------------------------------------------------------------------------

World::World(const SessionConfig& config, const FieldSource& field)
    : arena_(config.arena),
      scheme_(config.scheme),
      field_(&field),
      duration_(config.duration) {
  if (field.duration() < duration_) throw std::invalid_argument("field shorter than session");
  Rng place(derive_seed(config.seed, {kPlacementStream}));
  avatars_.reserve(config.seats.size());
  for (std::size_t i = 0; i < config.seats.size(); ++i) {
    const double x = place.uniform(kPlacementInset, arena_.width - kPlacementInset);
    const double y = place.uniform(kPlacementInset, arena_.height - kPlacementInset);
    const double heading = static_cast<double>(place.below(72)) * 5.0;
    AvatarState a = make_avatar(static_cast<int>(i), {quantize_milli(x), quantize_milli(y)}, heading);
    a.reward = field.value(a.pos, 0);
    avatars_.push_back(a);
    active_.push_back(1);
    ghost_.push_back(config.seats[i].ghost ? 1 : 0);
  }
}

std::size_t World::active_visible() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < avatars_.size(); ++i)
    if (active_[i] && !ghost_[i]) ++n;
  return n;
}

void World::observe(std::size_t seat, AgentObservation& out) const {
  out.t = t_;
  out.self = avatars_.at(seat);
  out.others.clear();
  for (std::size_t i = 0; i < avatars_.size(); ++i) {
    if (i == seat || !active_[i] || ghost_[i] != ghost_[seat]) continue;
    out.others.push_back(public_pose(avatars_[i]));
  }
  out.scheme = scheme_;
  out.arena = arena_;
  out.graded_field = field_->graded();
}

void World::apply(std::size_t seat, const Input& input) {
  avatars_.at(seat) = apply_input(avatars_.at(seat), input, scheme_, arena_);
}

void World::advance() {
  if (finished()) throw std::logic_error("session already finished");
  for (std::size_t i = 0; i < avatars_.size(); ++i) {
    if (!active_[i]) continue;
    avatars_[i] = step_avatar(avatars_[i], scheme_, arena_);
    score_tick(avatars_[i], *field_, t_, i);
  }
  ++t_;
}

TickRecord World::record(std::vector<Event> events) const {
  if (t_ == 0) throw std::logic_error("no completed tick to record");
  TickRecord rec;
  rec.t = t_ - 1;
  for (std::size_t i = 0; i < avatars_.size(); ++i) {
    if (!active_[i]) continue;
    (ghost_[i] ? rec.ghosts : rec.agents).push_back(AgentRecord::from(avatars_[i]));
  }
  rec.field = field_->centers(rec.t);
  for (auto& c : rec.field) c = {quantize_milli(c.x), quantize_milli(c.y)};
  rec.events = std::move(events);
  return rec;
}

void LogSink::on_tick(const World& world, std::span<const Event> events) {
  log_.ticks.push_back(world.record({events.begin(), events.end()}));
}

// ---------------------------------------------------------------------------

SessionRunner::SessionRunner(SessionConfig config, std::shared_ptr<const FieldSource> field,
                             std::vector<std::unique_ptr<Strategy>> strategies, TickSink* sink,
                             SessionHooks* hooks)
    : config_((config.validate(), std::move(config))),
      field_(std::move(field)),
      world_(config_, *field_),
      strategies_(std::move(strategies)),
      sink_(sink),
      hooks_(hooks) {
  if (strategies_.size() != config_.seats.size())
    throw std::invalid_argument("one strategy slot per seat required");
  rngs_.reserve(config_.seats.size());
  for (std::size_t i = 0; i < config_.seats.size(); ++i)
    rngs_.emplace_back(derive_seed(config_.seed, {static_cast<std::uint64_t>(i), kSeatStream}));
}

LogHeader SessionRunner::header() const {
  LogHeader h;
  h.config = config_;
  h.seed = config_.seed;
  if (hooks_) hooks_->annotate(h);
  return h;
}

void SessionRunner::start(std::span<const std::string> seat_labels) {
  if (started_) throw std::logic_error("session already started");
  started_ = true;
  if (sink_) sink_->on_start(header());
  const auto defaults = default_seat_labels(config_);
  for (std::size_t i = 0; i < config_.seats.size(); ++i)
    events_.push_back(Event::join(static_cast<int>(i), i < seat_labels.size() ? seat_labels[i] : defaults[i]));
}

void SessionRunner::remove_seat(std::size_t seat, std::string reason) {
  if (!world_.active(seat)) return;
  world_.deactivate(seat);
  events_.push_back(Event::drop(static_cast<int>(seat), std::move(reason)));
}

void SessionRunner::drive_seat(std::size_t seat) {
  world_.observe(seat, obs_);
  Strategy& s = *strategies_[seat];
  const Decision d = s.decide(obs_, rngs_[seat]);
  for (const Input& in : plan_inputs(d, world_.avatar(seat), world_.scheme())) {
    try {
      world_.apply(seat, in);
    } catch (const InputError& e) {
      throw SessionAborted(fmt::format("seat {} ({}) at tick {}: {}", seat, to_string(s.kind()),
                                       world_.tick(), e.what()));
    }
    if (in.kind == Input::Kind::click) events_.push_back(Event::click(static_cast<int>(seat), in.at));
  }
  if (config_.log_beliefs) {
    if (const BeliefState* b = s.beliefs()) {
      for (const auto& e : b->entries()) {
        Event ev;
        ev.kind = EventKind::belief;
        ev.agent = static_cast<int>(seat);
        ev.target = e.id;
        ev.value = quantize_milli(e.p);
        events_.push_back(ev);
      }
    }
  }
}

std::size_t SessionRunner::tick(std::span<const ExternalInput> external) {
  if (!started_) start();
  if (finished()) throw std::logic_error("session already finished");
  const std::size_t t = world_.tick();
  if (hooks_) hooks_->before_tick(t, world_, events_);

  std::size_t rejected = 0;
  for (const auto& x : external) {
    if (x.seat >= world_.seats() || !world_.active(x.seat)) {
      ++rejected;
      continue;
    }
    try {
      world_.apply(x.seat, x.input);
    } catch (const InputError&) {
      ++rejected;
      continue;
    }
    if (x.input.kind == Input::Kind::click)
      events_.push_back(Event::click(static_cast<int>(x.seat),
                                     {quantize_milli(x.input.at.x), quantize_milli(x.input.at.y)}));
  }
  for (std::size_t i = 0; i < strategies_.size(); ++i)
    if (strategies_[i] && world_.active(i)) drive_seat(i);

  world_.advance();
  if (sink_) sink_->on_tick(world_, events_);
  events_.clear();
  if (finished()) finish();
  return rejected;
}

void SessionRunner::finish() {
  if (ended_) return;
  ended_ = true;
  if (sink_) sink_->on_end(world_);
}

std::vector<std::unique_ptr<Strategy>> build_strategies(const SessionConfig& config) {
  std::vector<std::unique_ptr<Strategy>> out;
  out.reserve(config.seats.size());
  for (const auto& s : config.seats) out.push_back(make_strategy(s.strategy, s.params, {s.peers}));
  return out;
}

std::vector<std::string> default_seat_labels(const SessionConfig& config) {
  std::vector<std::string> out;
  for (const auto& s : config.seats) out.emplace_back(is_bot(s.strategy) ? "bot" : "agent");
  return out;
}

void run_session(const SessionConfig& config, std::shared_ptr<const FieldSource> field, TickSink& sink,
                 SessionHooks* hooks) {
  SessionRunner runner(config, std::move(field), build_strategies(config), &sink, hooks);
  runner.start();
  while (!runner.finished()) runner.tick();
}

ReplayLog run_session(const SessionConfig& config) {
  auto field = std::make_shared<ScoreField>(ScoreField::build(config.field, config.arena));
  LogSink sink;
  run_session(config, field, sink);
  return sink.take();
}

ReplayLog replay_inputs(const ReplayLog& log, std::shared_ptr<const FieldSource> field) {
  const auto config = log.header.config.get<SessionConfig>();
  config.validate();
  World world(config, *field);
  ReplayLog out;
  out.header = log.header;
  for (const auto& rec : log.ticks) {
    if (rec.t != world.tick()) throw LogError(fmt::format("tick {} out of sequence", rec.t));
    for (const auto& e : rec.events)
      if (e.kind == EventKind::drop) world.deactivate(static_cast<std::size_t>(e.agent));

    auto drive = [&](const AgentRecord& a) {
      const auto seat = static_cast<std::size_t>(a.id);
      const KeySet held = world.avatar(seat).keys;
      for (auto k : {Key::a, Key::s, Key::left, Key::right, Key::space})
        if (held.has(k) != a.keys.has(k))
          world.apply(seat, a.keys.has(k) ? Input::press(k) : Input::release(k));
    };
    for (const auto& a : rec.agents) drive(a);
    for (const auto& a : rec.ghosts) drive(a);
    for (const auto& e : rec.events)
      if (e.kind == EventKind::click) world.apply(static_cast<std::size_t>(e.agent), Input::click(e.at));

    world.advance();
    out.ticks.push_back(world.record(rec.events));
  }
  return out;
}

}  // namespace csense
