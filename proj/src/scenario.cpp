#include "csense/scenario.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace csense {

namespace {
constexpr std::uint64_t kPlanStream = 0x706c616e;    // "plan"
constexpr std::uint64_t kRegionStream = 0x72656769;  // "regi"
}  // namespace

std::string_view to_string(Intervention c) { return c == Intervention::local ? "local" : "distant"; }

Intervention intervention_from_string(std::string_view s) {
  if (s == "local") return Intervention::local;
  if (s == "distant") return Intervention::distant;
  throw std::invalid_argument(fmt::format("unknown intervention '{}'", s));
}

void ScenarioScript::validate() const {
  if (round_ticks == 0) throw std::invalid_argument("round must last at least one tick");
  if (onsets.empty()) throw std::invalid_argument("scenario needs at least one intervention");
  if (intervention_ticks == 0) throw std::invalid_argument("interventions must last at least one tick");
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    if (onsets[i] < jitter) throw std::invalid_argument("onset earlier than its jitter");
    const std::size_t earliest = onsets[i] - jitter;
    const std::size_t latest_end = onsets[i] + jitter + bot_offset + intervention_ticks;
    if (i > 0 && earliest < prev_end)
      throw std::invalid_argument(fmt::format("interventions {} and {} may overlap", i - 1, i));
    if (latest_end > round_ticks) throw std::invalid_argument("intervention runs past the round");
    prev_end = latest_end;
  }
}

void to_json(nlohmann::json& j, const ScenarioScript& s) {
  j = nlohmann::json{{"round_ticks", s.round_ticks},
                     {"onsets", s.onsets},
                     {"jitter", s.jitter},
                     {"intervention_ticks", s.intervention_ticks},
                     {"bot_offset", s.bot_offset},
                     {"randomize_order", s.randomize_order},
                     {"social", s.social}};
}

void from_json(const nlohmann::json& j, ScenarioScript& s) {
  const ScenarioScript d;
  s.round_ticks = j.value("round_ticks", d.round_ticks);
  s.onsets = j.value("onsets", d.onsets);
  s.jitter = j.value("jitter", d.jitter);
  s.intervention_ticks = j.value("intervention_ticks", d.intervention_ticks);
  s.bot_offset = j.value("bot_offset", d.bot_offset);
  s.randomize_order = j.value("randomize_order", d.randomize_order);
  s.social = j.value("social", d.social);
}

std::vector<PlannedIntervention> plan_scenario(const ScenarioScript& script, std::uint64_t seed) {
  script.validate();
  Rng rng(derive_seed(seed, {kPlanStream}));
  // Conditions alternate; a coin decides which one comes first.
  const bool local_first = script.randomize_order ? rng.bernoulli(0.5) : true;
  std::vector<PlannedIntervention> out;
  for (std::size_t i = 0; i < script.onsets.size(); ++i) {
    PlannedIntervention p;
    p.condition = ((i % 2 == 0) == local_first) ? Intervention::local : Intervention::distant;
    p.onset = script.onsets[i] - script.jitter + rng.below(2 * script.jitter + 1);
    p.bot_onset = p.onset + (p.condition == Intervention::local ? script.bot_offset : 0);
    p.end = p.bot_onset + script.intervention_ticks;
    p.wall_bot = kWallBots[rng.below(2)];
    p.center_bot = kCenterBots[rng.below(2)];
    out.push_back(p);
  }
  return out;
}

Point ScenarioField::Region::center(std::size_t t) const {
  return path.centers[std::min(t - start, path.centers.size() - 1)];
}

void ScenarioField::add(Region r) {
  if (r.path.centers.empty()) throw std::invalid_argument("region without a centre");
  if (r.end > duration_ || r.start >= r.end) throw std::invalid_argument("region outside the round");
  regions_.push_back(std::move(r));
}

double ScenarioField::value(Point p, std::size_t t) const {
  if (t >= duration_) throw FieldError(fmt::format("tick {} past scenario end {}", t, duration_));
  double v = 0.0;
  for (const auto& r : regions_)
    if (t >= r.start && t < r.end) v = std::max(v, spotlight_value(r.center(t), p));
  return v;
}

double ScenarioField::value_for(std::size_t seat, Point p, std::size_t t) const {
  if (seat == static_cast<std::size_t>(kParticipantSeat)) return value(p, t);
  if (t >= duration_) throw FieldError(fmt::format("tick {} past scenario end {}", t, duration_));
  double v = 0.0;
  for (const auto& r : regions_)
    if (r.role != Role::participant && t >= r.start && t < r.end) v = std::max(v, spotlight_value(r.center(t), p));
  return v;
}

std::vector<Point> ScenarioField::centers(std::size_t t) const {
  std::vector<Point> out;
  for (const auto& r : regions_)
    if (t >= r.start && t < r.end) out.push_back(r.center(t));
  return out;
}

std::vector<Point> ScenarioField::bot_centers(std::size_t t) const {
  std::vector<Point> out;
  for (const auto& r : regions_)
    if (r.role != Role::participant && t >= r.start && t < r.end) out.push_back(r.center(t));
  return out;
}

ScenarioHooks::ScenarioHooks(ScenarioScript script, std::vector<PlannedIntervention> plan,
                             std::shared_ptr<ScenarioField> field, std::uint64_t seed)
    : script_(std::move(script)), plan_(std::move(plan)), field_(std::move(field)), seed_(seed) {}

void ScenarioHooks::before_tick(std::size_t t, const World& world, std::vector<Event>& events) {
  const Arena& arena = world.arena();
  for (std::size_t i = 0; i < plan_.size(); ++i) {
    const auto& p = plan_[i];
    const std::string cond(to_string(p.condition));
    if (t == p.onset) {
      events.push_back(Event::intervention(cond, "on"));
      if (p.condition == Intervention::local) {
        ScenarioField::Region r;
        r.role = ScenarioField::Role::participant;
        r.start = t;
        r.end = p.end;  // the whole intervention ends together
        r.path.centers = {world.avatar(kParticipantSeat).pos};
        field_->add(std::move(r));
      }
    }
    if (t == p.bot_onset) {
      const std::size_t len = p.end - t;
      ScenarioField::Region w;
      w.role = ScenarioField::Role::wall_bot;
      w.start = t;
      w.end = p.end;
      w.path = generate_wall_path(derive_seed(seed_, {kRegionStream, i, 0}), arena, kSlowSpeed, len,
                                  world.avatar(static_cast<std::size_t>(p.wall_bot)).pos);
      field_->add(std::move(w));
      ScenarioField::Region c;
      c.role = ScenarioField::Role::center_bot;
      c.start = t;
      c.end = p.end;
      c.path = generate_spotlight_path(derive_seed(seed_, {kRegionStream, i, 1}), arena, kSlowSpeed, len,
                                       world.avatar(static_cast<std::size_t>(p.center_bot)).pos);
      field_->add(std::move(c));
    }
    if (t == p.end) events.push_back(Event::intervention(cond, "off"));
  }
}

void ScenarioHooks::annotate(LogHeader& header) const {
  nlohmann::json plan = nlohmann::json::array();
  for (const auto& p : plan_)
    plan.push_back({{"condition", to_string(p.condition)},
                    {"onset", p.onset},
                    {"bot_onset", p.bot_onset},
                    {"end", p.end},
                    {"wall_bot", p.wall_bot},
                    {"center_bot", p.center_bot}});
  header.config["scenario"] = {{"script", script_}, {"plan", std::move(plan)}};
}

ScenarioSession make_scenario(const ScenarioScript& script, const SeatConfig& participant,
                              std::uint64_t seed) {
  ScenarioSession s;
  s.plan = plan_scenario(script, seed);
  s.config.field.kind = FieldKind::zero;
  s.config.field.duration = script.round_ticks;
  s.config.duration = script.round_ticks;
  s.config.scheme = ControlScheme::click_steer();
  s.config.seed = seed;
  s.config.seats.push_back(participant);
  s.config.seats.front().ghost = false;
  const bool ghost = !script.social;
  for (int k = 0; k < 2; ++k)
    s.config.seats.push_back({StrategyKind::bot_wall, {}, {kWallBots[0], kWallBots[1]}, ghost});
  for (int k = 0; k < 2; ++k)
    s.config.seats.push_back({StrategyKind::bot_center, {}, {kCenterBots[0], kCenterBots[1]}, ghost});
  s.field = std::make_shared<ScenarioField>(script.round_ticks);
  s.hooks = std::make_unique<ScenarioHooks>(script, s.plan, s.field, seed);
  return s;
}

ReplayLog run_exp2_scenario(const ScenarioScript& script, const SeatConfig& participant,
                            std::uint64_t seed) {
  ScenarioSession s = make_scenario(script, participant, seed);
  LogSink sink;
  run_session(s.config, s.field, sink, s.hooks.get());
  return sink.take();
}

}  // namespace csense
