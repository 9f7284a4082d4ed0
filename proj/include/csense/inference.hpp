#pragma once
// Bayesian observer: reads exploit-like behaviour off other agents' public
// trajectories and maintains a posterior that each is currently rewarded.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "csense/engine.hpp"

namespace csense {

enum class Cue { exploit, not_exploit };

struct LikelihoodModel {
  double epsilon = 0.15;  // P(no exploit cue | rewarded)
  double delta = 0.05;    // P(exploit cue | unrewarded)
};

struct BeliefUpdate {
  double posterior = 0.0;
  bool degenerate = false;  // evidence had zero probability; posterior = prior
};

/// One conditionally independent Bayes step on the binary hidden reward.
BeliefUpdate update_belief(double p, double epsilon, double delta, Cue observed);

/// Ticks of zero speed required before a stop counts as exploiting.
inline constexpr std::size_t kStopCueTicks = 4;

/// Exploit cue from a trailing window of one agent's poses, oldest first.
/// Click-steer: the last kStopCueTicks poses all move no faster than
/// `speed_ceiling` (px/s; 0 means stopped). Turn-keys: the spinning criterion
/// of the state classifier.
bool detect_exploit(std::span<const PublicPose> window, SchemeKind scheme, double speed_ceiling = 0.0);

/// Poses the cue detector needs to look back over.
std::size_t cue_window(SchemeKind scheme);

struct BeliefParams {
  LikelihoodModel likelihood{};
  double prior = 0.0144;  // spotlight area fraction
  double decay = 0.1;     // per-tick pull toward the prior once cues cease
  double cue_speed_ceiling = 0.0;  // px/s, click-steer stop cue
};

/// Per-observer posterior over every other agent's hidden reward.
class BeliefState {
 public:
  explicit BeliefState(BeliefParams params = {}, SchemeKind scheme = SchemeKind::click_steer);

  /// Feeds one tick of public poses. Agents seen for the first time start at
  /// the prior; agents no longer present are forgotten.
  void observe(std::span<const PublicPose> others);

  /// Posterior for agent id, or the prior if the agent is unknown.
  double posterior(int id) const;
  bool cue_active(int id) const;

  struct Entry {
    int id = 0;
    double p = 0.0;
    bool cue = false;
    bool degenerate = false;
    std::vector<PublicPose> history;  // trailing cue window, oldest first
  };
  std::span<const Entry> entries() const { return entries_; }
  const BeliefParams& params() const { return params_; }

 private:
  Entry* find(int id);
  const Entry* find(int id) const;

  BeliefParams params_;
  SchemeKind scheme_;
  std::size_t window_;
  std::vector<Entry> entries_;  // sorted by id
};

struct Candidate {
  int id = 0;
  double posterior = 0.0;
  Point pos{};
};

/// Highest posterior at or above threshold; ties go to the nearest agent,
/// then the lowest id. Empty when nobody qualifies.
std::optional<int> select_copy_target(std::span<const Candidate> candidates, Point observer,
                                      double threshold);

}  // namespace csense
