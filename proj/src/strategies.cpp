#include "csense/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace csense {

namespace {

// Turn-keys steering cannot hit a point exactly; these bound a leg.
constexpr double kTurnKeysArrival = 20.0;
constexpr std::size_t kTurnKeysLegTimeout = 240;

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::invalid_argument(fmt::format("strategy parameter {} must lie in [0,1], got {}", name, v));
}

bool rewarded(const AgentObservation& obs, const StrategyParams& params) {
  return obs.self.reward > params.exploit_level(obs.graded_field);
}

Decision exploit_decision(const AgentObservation& obs, const StrategyParams& params) {
  if (!params.exploit_slow || obs.scheme.kind != SchemeKind::click_steer) return Decision::exploit();
  // Hold the current heading at slow speed.
  Decision d;
  d.destination = obs.self.destination;
  d.intent = Intent::exploit;
  return d;
}

void choose_explore(const AgentObservation& obs, const StrategyParams& params, Rng& rng,
                    Navigator& nav, bool lost_reward, bool allow_reacquire = true) {
  // Search near the last rewarded position; every further choice stays local
  // with probability p_local until a global draw ends the search.
  if (lost_reward) nav.searching = true;
  if (lost_reward && allow_reacquire && params.reacquire && obs.scheme.kind == SchemeKind::click_steer) {
    nav.set(nav.last_reward_pos, Intent::explore, -1, params.explore_fast, obs.t);
    return;
  }
  Point p;
  if (nav.searching && rng.bernoulli(params.p_local)) {
    p = local_destination(rng, obs.arena, nav.last_reward_pos, params.local_radius, params.edge_margin);
  } else {
    p = uniform_destination(rng, obs.arena, params.edge_margin);
    nav.searching = false;
  }
  nav.set(p, Intent::explore, -1, params.explore_fast, obs.t);
}

/// Shared skeleton of the heuristic models: exploit on reward, and at every
/// destination choice explore with probability theta_exp, otherwise apply the
/// model's social rule.
template <typename SocialRule>
Decision heuristic_decide(const AgentObservation& obs, const StrategyParams& params, Rng& rng,
                          Navigator& nav, SocialRule&& social) {
  if (rewarded(obs, params)) {
    nav.was_exploiting = true;
    nav.last_reward_pos = obs.self.pos;
    return exploit_decision(obs, params);
  }
  const bool lost = nav.was_exploiting;
  nav.was_exploiting = false;
  if (lost || nav.needs_goal(obs)) {
    if (obs.others.empty() || rng.bernoulli(params.theta_exp))
      choose_explore(obs, params, rng, nav, lost);
    else
      social(lost);
  }
  return nav.emit();
}

Point centroid_of(std::span<const PublicPose> others) {
  Point c{};
  for (const auto& o : others) {
    c.x += o.pos.x;
    c.y += o.pos.y;
  }
  const auto n = static_cast<double>(others.size());
  return {c.x / n, c.y / n};
}

class AsocialStrategy final : public Strategy {
 public:
  explicit AsocialStrategy(StrategyParams p) : params_(p) {}
  Decision decide(const AgentObservation& obs, Rng& rng) override {
    return asocial_decide(obs, params_, rng, nav_);
  }
  StrategyKind kind() const override { return StrategyKind::asocial; }

 private:
  StrategyParams params_;
  Navigator nav_;
};

class CentroidStrategy final : public Strategy {
 public:
  explicit CentroidStrategy(StrategyParams p) : params_(p) {}
  Decision decide(const AgentObservation& obs, Rng& rng) override {
    return centroid_decide(obs, params_, rng, nav_);
  }
  StrategyKind kind() const override { return StrategyKind::centroid; }

 private:
  StrategyParams params_;
  Navigator nav_;
};

class NaiveCopyStrategy final : public Strategy {
 public:
  explicit NaiveCopyStrategy(StrategyParams p) : params_(p) {}
  Decision decide(const AgentObservation& obs, Rng& rng) override {
    return naive_copy_decide(obs, params_, rng, nav_);
  }
  StrategyKind kind() const override { return StrategyKind::naive_copy; }

 private:
  StrategyParams params_;
  Navigator nav_;
};

class SocialInferenceStrategy final : public Strategy {
 public:
  explicit SocialInferenceStrategy(StrategyParams p) : params_(p) {}
  Decision decide(const AgentObservation& obs, Rng& rng) override {
    if (!beliefs_) {
      BeliefParams bp;
      bp.likelihood = {params_.epsilon, params_.delta};
      bp.prior = params_.prior;
      bp.decay = params_.decay;
      bp.cue_speed_ceiling = params_.cue_speed_ceiling;
      beliefs_.emplace(bp, obs.scheme.kind);
    }
    beliefs_->observe(obs.others);
    return social_inference_decide(obs, *beliefs_, params_, rng, nav_);
  }
  StrategyKind kind() const override { return StrategyKind::social_inference; }
  const BeliefState* beliefs() const override { return beliefs_ ? &*beliefs_ : nullptr; }

 private:
  StrategyParams params_;
  std::optional<BeliefState> beliefs_;
  Navigator nav_;
};

class BotStrategy final : public Strategy {
 public:
  BotStrategy(BotClass cls, std::vector<int> peers) : cls_(cls), peers_(std::move(peers)) {}
  Decision decide(const AgentObservation& obs, Rng& rng) override {
    return scripted_bot_decide(obs, cls_, peers_, rng, nav_);
  }
  StrategyKind kind() const override {
    return cls_ == BotClass::wall ? StrategyKind::bot_wall : StrategyKind::bot_center;
  }

 private:
  BotClass cls_;
  std::vector<int> peers_;
  Navigator nav_;
};

class IdleStrategy final : public Strategy {
 public:
  Decision decide(const AgentObservation& obs, Rng&) override {
    Decision d;
    d.destination = obs.self.destination;
    return d;
  }
  StrategyKind kind() const override { return StrategyKind::idle; }
};

}  // namespace

std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::asocial: return "asocial";
    case StrategyKind::centroid: return "move-to-center";
    case StrategyKind::naive_copy: return "naive-copy";
    case StrategyKind::social_inference: return "social-inference";
    case StrategyKind::bot_wall: return "bot-wall";
    case StrategyKind::bot_center: return "bot-center";
    case StrategyKind::idle: return "idle";
  }
  return "?";
}

StrategyKind strategy_from_string(std::string_view s) {
  for (auto k : {StrategyKind::asocial, StrategyKind::centroid, StrategyKind::naive_copy,
                 StrategyKind::social_inference, StrategyKind::bot_wall, StrategyKind::bot_center,
                 StrategyKind::idle})
    if (to_string(k) == s) return k;
  throw std::invalid_argument(fmt::format("unknown strategy '{}'", s));
}

void StrategyParams::validate() const {
  check_unit(theta_exp, "theta_exp");
  check_unit(beta, "beta");
  check_unit(epsilon, "epsilon");
  check_unit(copy_threshold, "copy_threshold");
  check_unit(delta, "delta");
  check_unit(prior, "prior");
  check_unit(decay, "decay");
  check_unit(p_local, "p_local");
  check_unit(graded_exploit_threshold, "graded_exploit_threshold");
  if (exploit_threshold > 1.0) throw std::invalid_argument("exploit_threshold must be <= 1");
  if (!(local_radius > 0.0)) throw std::invalid_argument("local_radius must be positive");
  if (edge_margin < 0.0) throw std::invalid_argument("edge_margin must be non-negative");
  if (!(cue_speed_ceiling >= 0.0 && cue_speed_ceiling < kFastSpeed))
    throw std::invalid_argument("cue_speed_ceiling must lie in [0, fast speed)");
}

void to_json(nlohmann::json& j, const StrategyParams& p) {
  j = nlohmann::json{{"theta_exp", p.theta_exp},
                     {"beta", p.beta},
                     {"epsilon", p.epsilon},
                     {"copy_threshold", p.copy_threshold},
                     {"delta", p.delta},
                     {"prior", p.prior},
                     {"decay", p.decay},
                     {"exploit_threshold", p.exploit_threshold},
                     {"graded_exploit_threshold", p.graded_exploit_threshold},
                     {"p_local", p.p_local},
                     {"local_radius", p.local_radius},
                     {"explore_fast", p.explore_fast},
                     {"copy_fast", p.copy_fast},
                     {"edge_margin", p.edge_margin},
                     {"exploit_slow", p.exploit_slow},
                     {"cue_speed_ceiling", p.cue_speed_ceiling},
                     {"reacquire", p.reacquire}};
}

void from_json(const nlohmann::json& j, StrategyParams& p) {
  StrategyParams d;
  p.theta_exp = j.value("theta_exp", d.theta_exp);
  p.beta = j.value("beta", d.beta);
  p.epsilon = j.value("epsilon", d.epsilon);
  p.copy_threshold = j.value("copy_threshold", d.copy_threshold);
  p.delta = j.value("delta", d.delta);
  p.prior = j.value("prior", d.prior);
  p.decay = j.value("decay", d.decay);
  p.exploit_threshold = j.value("exploit_threshold", d.exploit_threshold);
  p.graded_exploit_threshold = j.value("graded_exploit_threshold", d.graded_exploit_threshold);
  p.p_local = j.value("p_local", d.p_local);
  p.local_radius = j.value("local_radius", d.local_radius);
  p.explore_fast = j.value("explore_fast", d.explore_fast);
  p.copy_fast = j.value("copy_fast", d.copy_fast);
  p.edge_margin = j.value("edge_margin", d.edge_margin);
  p.exploit_slow = j.value("exploit_slow", d.exploit_slow);
  p.cue_speed_ceiling = j.value("cue_speed_ceiling", d.cue_speed_ceiling);
  p.reacquire = j.value("reacquire", d.reacquire);
}

std::unique_ptr<Strategy> make_strategy(StrategyKind kind, const StrategyParams& params,
                                        const StrategyContext& ctx) {
  params.validate();
  switch (kind) {
    case StrategyKind::asocial: return std::make_unique<AsocialStrategy>(params);
    case StrategyKind::centroid: return std::make_unique<CentroidStrategy>(params);
    case StrategyKind::naive_copy: return std::make_unique<NaiveCopyStrategy>(params);
    case StrategyKind::social_inference: return std::make_unique<SocialInferenceStrategy>(params);
    case StrategyKind::bot_wall: return std::make_unique<BotStrategy>(BotClass::wall, ctx.peers);
    case StrategyKind::bot_center: return std::make_unique<BotStrategy>(BotClass::center, ctx.peers);
    case StrategyKind::idle: return std::make_unique<IdleStrategy>();
  }
  throw std::invalid_argument("unknown strategy kind");
}

Point uniform_destination(Rng& rng, const Arena& arena, double margin) {
  const double x = rng.uniform(margin, arena.width - margin);
  const double y = rng.uniform(margin, arena.height - margin);
  return {x, y};
}

Point local_destination(Rng& rng, const Arena& arena, Point centre, double radius, double margin) {
  const double r = radius * std::sqrt(rng.uniform());
  const double a = 2.0 * kPi * rng.uniform();
  return {std::clamp(centre.x + r * std::cos(a), margin, arena.width - margin),
          std::clamp(centre.y + r * std::sin(a), margin, arena.height - margin)};
}

bool Navigator::needs_goal(const AgentObservation& obs) const {
  if (!goal) return true;
  if (obs.scheme.kind == SchemeKind::click_steer) return !obs.self.destination.has_value();
  return distance(obs.self.pos, *goal) <= kTurnKeysArrival || obs.t - goal_since > kTurnKeysLegTimeout;
}

void Navigator::set(Point p, Intent i, int tgt, bool go_fast, std::size_t t) {
  goal = Point{quantize_milli(p.x), quantize_milli(p.y)};
  intent = i;
  target = tgt;
  fast = go_fast;
  goal_since = t;
}

Decision Navigator::emit() const {
  Decision d;
  d.destination = goal;
  d.accelerate = fast;
  d.intent = intent;
  d.target = target;
  return d;
}

Decision asocial_decide(const AgentObservation& obs, const StrategyParams& params, Rng& rng,
                        Navigator& nav) {
  if (rewarded(obs, params)) {
    nav.was_exploiting = true;
    nav.last_reward_pos = obs.self.pos;
    return exploit_decision(obs, params);
  }
  const bool lost = nav.was_exploiting;
  nav.was_exploiting = false;
  if (lost || nav.needs_goal(obs)) choose_explore(obs, params, rng, nav, lost);
  return nav.emit();
}

Decision centroid_decide(const AgentObservation& obs, const StrategyParams& params, Rng& rng,
                         Navigator& nav) {
  return heuristic_decide(obs, params, rng, nav, [&](bool lost) {
    // The blend starts from a fresh draw, not from a return leg.
    choose_explore(obs, params, rng, nav, lost, false);
    const Point r = *nav.goal;
    const Point c = centroid_of(obs.others);
    const double b = params.beta;
    nav.set({(1.0 - b) * r.x + b * c.x, (1.0 - b) * r.y + b * c.y}, Intent::explore, -1,
            params.explore_fast, obs.t);
  });
}

Decision naive_copy_decide(const AgentObservation& obs, const StrategyParams& params, Rng& rng,
                           Navigator& nav) {
  return heuristic_decide(obs, params, rng, nav, [&](bool) {
    const auto& target = obs.others[rng.below(obs.others.size())];
    nav.set(target.pos, Intent::copy, target.id, params.copy_fast, obs.t);
  });
}

Decision social_inference_decide(const AgentObservation& obs, const BeliefState& beliefs,
                                 const StrategyParams& params, Rng& rng, Navigator& nav) {
  if (rewarded(obs, params)) {
    nav.was_exploiting = true;
    nav.last_reward_pos = obs.self.pos;
    if (rng.bernoulli(1.0 - params.epsilon)) return exploit_decision(obs, params);
    // Execution noise: keep moving on the current leg instead of holding.
    Decision d;
    d.destination = obs.scheme.kind == SchemeKind::click_steer ? obs.self.destination : nav.goal;
    d.accelerate = nav.fast;
    return d;
  }

  std::erase_if(nav.checked, [&](int id) { return !beliefs.cue_active(id); });
  std::vector<Candidate> candidates;
  candidates.reserve(obs.others.size());
  for (const auto& o : obs.others) {
    if (std::find(nav.checked.begin(), nav.checked.end(), o.id) != nav.checked.end()) continue;
    // Already standing on top of a presumed exploiter without reward: that
    // spot has moved on, so copying it again gains nothing.
    if (distance(o.pos, obs.self.pos) <= kSpotlightRadius) {
      if (beliefs.cue_active(o.id)) nav.checked.push_back(o.id);
      continue;
    }
    candidates.push_back({o.id, beliefs.posterior(o.id), o.pos});
  }

  const bool lost = nav.was_exploiting;
  nav.was_exploiting = false;
  if (lost && params.reacquire && obs.scheme.kind == SchemeKind::click_steer) {
    choose_explore(obs, params, rng, nav, true);
    return nav.emit();
  }
  if (auto target = select_copy_target(candidates, obs.self.pos, params.copy_threshold)) {
    const auto it = std::find_if(obs.others.begin(), obs.others.end(),
                                 [&](const PublicPose& p) { return p.id == *target; });
    nav.set(it->pos, Intent::copy, *target, params.copy_fast, obs.t);
    return nav.emit();
  }
  if (nav.intent == Intent::copy && nav.goal && distance(obs.self.pos, *nav.goal) <= kSpotlightRadius) {
    // Arrived where the copied agent was and found nothing: search nearby.
    if (nav.target >= 0 && beliefs.cue_active(nav.target)) nav.checked.push_back(nav.target);
    nav.last_reward_pos = *nav.goal;
    choose_explore(obs, params, rng, nav, true);
    return nav.emit();
  }
  if (lost || nav.needs_goal(obs)) choose_explore(obs, params, rng, nav, lost);
  return nav.emit();
}

Rect center_region(const Arena& arena) {
  return {arena.width * 0.2, arena.height * 0.2, arena.width * 0.8, arena.height * 0.8};
}

namespace {
Point patrol_corner(const Arena& arena, int i) {
  const double m = kWallPatrolInset;
  switch (((i % 4) + 4) % 4) {
    case 0: return {m, m};
    case 1: return {arena.width - m, m};
    case 2: return {arena.width - m, arena.height - m};
    default: return {m, arena.height - m};
  }
}

int nearest_corner(const Arena& arena, Point p) {
  int best = 0;
  for (int i = 1; i < 4; ++i)
    if (distance(p, patrol_corner(arena, i)) < distance(p, patrol_corner(arena, best))) best = i;
  return best;
}
}  // namespace

Decision scripted_bot_decide(const AgentObservation& obs, BotClass cls, std::span<const int> peers,
                             Rng& rng, Navigator& nav) {
  if (obs.self.reward > 0.0) {
    nav.was_exploiting = true;
    return Decision::exploit();
  }
  const bool lost = nav.was_exploiting;
  nav.was_exploiting = false;

  const PublicPose* stopped = nullptr;
  for (const auto& o : obs.others) {
    if (o.speed != 0.0) continue;
    if (std::find(peers.begin(), peers.end(), o.id) == peers.end()) continue;
    if (!stopped || distance_sq(o.pos, obs.self.pos) < distance_sq(stopped->pos, obs.self.pos))
      stopped = &o;
  }
  if (stopped) {
    nav.set(stopped->pos, Intent::copy, stopped->id, true, obs.t);
    return nav.emit();
  }
  if (lost || nav.intent == Intent::copy || nav.needs_goal(obs)) {
    if (cls == BotClass::wall) {
      if (nav.patrol_dir == 0) nav.patrol_dir = rng.bernoulli(0.5) ? 1 : -1;
      if (nav.corner < 0 || nav.intent == Intent::copy || lost)
        nav.corner = nearest_corner(obs.arena, obs.self.pos);
      nav.corner = ((nav.corner + nav.patrol_dir) % 4 + 4) % 4;
      nav.set(patrol_corner(obs.arena, nav.corner), Intent::explore, -1, true, obs.t);
    } else {
      const Rect r = center_region(obs.arena);
      nav.set({rng.uniform(r.x0, r.x1), rng.uniform(r.y0, r.y1)}, Intent::explore, -1, true, obs.t);
    }
  }
  return nav.emit();
}

}  // namespace csense
