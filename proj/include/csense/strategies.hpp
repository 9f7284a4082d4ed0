#pragma once

#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "csense/engine.hpp"
#include "csense/inference.hpp"
#include "csense/rng.hpp"

namespace csense {

enum class StrategyKind {
  asocial,
  centroid,          // move-to-center heuristic
  naive_copy,
  social_inference,
  bot_wall,          // scripted wall-following bot
  bot_center,        // scripted interior bot
  idle,              // no inputs; placeholder seat for live humans
};

std::string_view to_string(StrategyKind k);
StrategyKind strategy_from_string(std::string_view s);

struct StrategyParams {
  double theta_exp = 0.1;        // independent-explore probability
  double beta = 0.5;             // centroid bias (move-to-center)
  double epsilon = 0.15;         // exploit noise (social inference)
  double copy_threshold = 0.5;   // posterior needed to copy
  double delta = 0.05;           // false exploit-cue rate assumed by the observer
  double prior = 0.0144;         // prior reward probability
  double decay = 0.1;            // posterior pull toward prior once cues cease

  /// Reward level above which an agent exploits. Negative means automatic:
  /// 0 on binary fields, graded_exploit_threshold on graded ones.
  double exploit_threshold = -1.0;
  double graded_exploit_threshold = 0.5;

  double p_local = 0.5;          // local re-exploration after losing reward
  double local_radius = 60.0;    // px
  bool explore_fast = true;
  bool copy_fast = true;
  double edge_margin = 10.0;     // destinations keep this far from the walls
  bool exploit_slow = true;      // click-steer: exploit by slowing instead of stopping
  double cue_speed_ceiling = kSlowSpeed;  // px/s an observer still reads as an exploit cue
  bool reacquire = true;         // click-steer: on losing reward, first head back to where it was

  void validate() const;
  double exploit_level(bool graded) const {
    if (exploit_threshold >= 0.0) return exploit_threshold;
    return graded ? graded_exploit_threshold : 0.0;
  }
  friend bool operator==(const StrategyParams&, const StrategyParams&) = default;
};

void to_json(nlohmann::json& j, const StrategyParams& p);
void from_json(const nlohmann::json& j, StrategyParams& p);

class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual Decision decide(const AgentObservation& obs, Rng& rng) = 0;
  virtual StrategyKind kind() const = 0;
  /// Observer beliefs, for strategies that keep them.
  virtual const BeliefState* beliefs() const { return nullptr; }
};

/// Context a strategy needs at construction beyond its parameters.
struct StrategyContext {
  std::vector<int> peers;  // bots: ids of same-class bots they may copy
};

std::unique_ptr<Strategy> make_strategy(StrategyKind kind, const StrategyParams& params,
                                        const StrategyContext& ctx = {});

/// Uniform destination inside the arena, `margin` away from the walls.
Point uniform_destination(Rng& rng, const Arena& arena, double margin);

/// Bearing-independent local draw: uniform in the disk of `radius` around
/// `centre`, clipped into the margin-inset arena.
Point local_destination(Rng& rng, const Arena& arena, Point centre, double radius, double margin);

// Free-function forms of the per-tick rules. Each strategy class owns a
// Navigator and calls one of these; they are exposed for testing.

/// Destination bookkeeping shared by all strategies. Under click-steer the
/// engine clears the destination on arrival; under turn-keys the navigator
/// decides arrival itself (the turning circle is too wide for exact arrival).
struct Navigator {
  std::optional<Point> goal;
  Intent intent = Intent::explore;
  int target = -1;
  bool fast = false;
  std::size_t goal_since = 0;
  bool was_exploiting = false;
  Point last_reward_pos{};
  bool searching = false;  // local re-exploration around last_reward_pos
  int patrol_dir = 0;  // wall bots: +1 clockwise, -1 counter-clockwise, 0 unset
  int corner = -1;     // wall bots: index of the corner being approached
  std::vector<int> checked;  // copy targets visited without reward, ignored while their cue lasts

  bool needs_goal(const AgentObservation& obs) const;
  void set(Point p, Intent i, int tgt, bool go_fast, std::size_t t);
  Decision emit() const;
};

Decision asocial_decide(const AgentObservation& obs, const StrategyParams& params, Rng& rng,
                        Navigator& nav);
Decision centroid_decide(const AgentObservation& obs, const StrategyParams& params, Rng& rng,
                         Navigator& nav);
Decision naive_copy_decide(const AgentObservation& obs, const StrategyParams& params, Rng& rng,
                           Navigator& nav);
/// `beliefs` must already have observed this tick's poses.
Decision social_inference_decide(const AgentObservation& obs, const BeliefState& beliefs,
                                 const StrategyParams& params, Rng& rng, Navigator& nav);

enum class BotClass { wall, center };

/// Scripted Exp-2 bot: stop on reward, copy a stopped same-class peer,
/// otherwise patrol (wall) or random-walk the interior (center).
Decision scripted_bot_decide(const AgentObservation& obs, BotClass cls,
                             std::span<const int> peers, Rng& rng, Navigator& nav);

/// Interior region explored by center bots.
struct Rect {
  double x0, y0, x1, y1;
  bool contains(Point p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};
Rect center_region(const Arena& arena);
/// Inset of the rectangle wall bots patrol, px from the arena edge.
inline constexpr double kWallPatrolInset = 12.0;

}  // namespace csense
