#include "csense/inference.hpp"

#include <algorithm>

#include "csense/classifier.hpp"

namespace csense {

BeliefUpdate update_belief(double p, double epsilon, double delta, Cue observed) {
  // Likelihood of the observation under rewarded / unrewarded.
  const double l1 = observed == Cue::exploit ? 1.0 - epsilon : epsilon;
  const double l0 = observed == Cue::exploit ? delta : 1.0 - delta;
  const double num = l1 * p;
  const double den = num + l0 * (1.0 - p);
  if (den <= 0.0) return {p, true};
  return {num / den, false};
}

std::size_t cue_window(SchemeKind scheme) {
  return scheme == SchemeKind::click_steer ? kStopCueTicks : ClassifierParams{}.spin_window + 1;
}

bool detect_exploit(std::span<const PublicPose> window, SchemeKind scheme, double speed_ceiling) {
  if (scheme == SchemeKind::click_steer) {
    if (window.size() < kStopCueTicks) return false;
    return std::all_of(window.end() - kStopCueTicks, window.end(),
                       [&](const PublicPose& p) { return p.speed <= speed_ceiling + 1e-9; });
  }
  const std::size_t need = cue_window(scheme);
  if (window.size() < need) return false;
  return detect_spinning(window.subspan(window.size() - need), ClassifierParams{});
}

BeliefState::BeliefState(BeliefParams params, SchemeKind scheme)
    : params_(params), scheme_(scheme), window_(cue_window(scheme)) {}

BeliefState::Entry* BeliefState::find(int id) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const Entry& e, int v) { return e.id < v; });
  return (it != entries_.end() && it->id == id) ? &*it : nullptr;
}

const BeliefState::Entry* BeliefState::find(int id) const {
  return const_cast<BeliefState*>(this)->find(id);
}

void BeliefState::observe(std::span<const PublicPose> others) {
  // Drop agents that disappeared.
  std::erase_if(entries_, [&](const Entry& e) {
    return std::none_of(others.begin(), others.end(), [&](const PublicPose& p) { return p.id == e.id; });
  });
  const auto& lk = params_.likelihood;
  for (const auto& pose : others) {
    Entry* e = find(pose.id);
    if (!e) {
      Entry fresh;
      fresh.id = pose.id;
      fresh.p = params_.prior;
      auto it = std::lower_bound(entries_.begin(), entries_.end(), pose.id,
                                 [](const Entry& x, int v) { return x.id < v; });
      e = &*entries_.insert(it, std::move(fresh));
    }
    e->history.push_back(pose);
    if (e->history.size() > window_) e->history.erase(e->history.begin());

    e->cue = detect_exploit(e->history, scheme_, params_.cue_speed_ceiling);
    const auto upd = update_belief(e->p, lk.epsilon, lk.delta, e->cue ? Cue::exploit : Cue::not_exploit);
    e->degenerate = upd.degenerate;
    e->p = upd.posterior;
    if (!e->cue) e->p += params_.decay * (params_.prior - e->p);
    e->p = std::clamp(e->p, 0.0, 1.0);
  }
}

double BeliefState::posterior(int id) const {
  const Entry* e = find(id);
  return e ? e->p : params_.prior;
}

bool BeliefState::cue_active(int id) const {
  const Entry* e = find(id);
  return e && e->cue;
}

std::optional<int> select_copy_target(std::span<const Candidate> candidates, Point observer,
                                      double threshold) {
  const Candidate* best = nullptr;
  double best_d = 0.0;
  for (const auto& c : candidates) {
    if (c.posterior < threshold) continue;
    const double d = distance_sq(c.pos, observer);
    if (!best || c.posterior > best->posterior ||
        (c.posterior == best->posterior && (d < best_d || (d == best_d && c.id < best->id)))) {
      best = &c;
      best_d = d;
    }
  }
  if (!best) return std::nullopt;
  return best->id;
}

}  // namespace csense
