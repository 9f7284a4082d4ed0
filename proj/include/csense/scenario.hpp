#pragma once
// Exp-2 micro-scenarios: a one-minute round on an empty field with two timed
// interventions that drop scoring regions on top of bots (distant) or on the
// participant and then the bots (local).

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "csense/session.hpp"

namespace csense {

enum class Intervention { local, distant };

std::string_view to_string(Intervention c);
Intervention intervention_from_string(std::string_view s);

struct ScenarioScript {
  std::size_t round_ticks = 480;               // 60 s
  std::vector<std::size_t> onsets{80, 320};    // ~10 s and ~40 s
  std::size_t jitter = 8;                      // onsets drawn uniformly within +-jitter ticks
  std::size_t intervention_ticks = 80;         // ~10 s
  std::size_t bot_offset = 16;                 // local: bot regions trail the participant's by 2 s
  bool randomize_order = true;                 // otherwise local comes first
  bool social = true;                          // bots visible; otherwise simulated as ghosts

  /// Throws std::invalid_argument unless the interventions are disjoint and
  /// fit in the round.
  void validate() const;
};

void to_json(nlohmann::json& j, const ScenarioScript& s);
void from_json(const nlohmann::json& j, ScenarioScript& s);

/// Seats of a scenario session.
inline constexpr std::size_t kParticipantSeat = 0;
inline constexpr int kWallBots[2] = {1, 2};
inline constexpr int kCenterBots[2] = {3, 4};

struct PlannedIntervention {
  Intervention condition = Intervention::distant;
  std::size_t onset = 0;            // participant-side trigger
  std::size_t bot_onset = 0;        // regions placed on the bots
  std::size_t end = 0;              // exclusive, covers the bot regions too
  int wall_bot = kWallBots[0];
  int center_bot = kCenterBots[0];
};

/// Timeline realised from a script and seed. Social and non-social rounds
/// with the same seed share it.
std::vector<PlannedIntervention> plan_scenario(const ScenarioScript& script, std::uint64_t seed);

/// Scoring regions added while the session runs. Regions are only ever
/// appended, before the tick that first scores them.
class ScenarioField final : public FieldSource {
 public:
  enum class Role { participant, wall_bot, center_bot };
  struct Region {
    Role role = Role::participant;
    std::size_t start = 0;
    std::size_t end = 0;       // exclusive
    SpotlightPath path;        // centers indexed from `start`; one center means stationary
    Point center(std::size_t t) const;
  };

  explicit ScenarioField(std::size_t duration) : duration_(duration) {}

  void add(Region r);
  double value(Point p, std::size_t t) const override;
  /// Bots score only on bot-placed regions; the participant scores on all.
  double value_for(std::size_t seat, Point p, std::size_t t) const override;
  std::vector<Point> centers(std::size_t t) const override;
  std::size_t duration() const override { return duration_; }
  bool graded() const override { return false; }

  /// Centers of the bot-placed regions only.
  std::vector<Point> bot_centers(std::size_t t) const;
  const std::vector<Region>& regions() const { return regions_; }

 private:
  std::size_t duration_;
  std::vector<Region> regions_;
};

/// Places the planned regions as their trigger ticks arrive and records the
/// intervention on/off events.
class ScenarioHooks final : public SessionHooks {
 public:
  ScenarioHooks(ScenarioScript script, std::vector<PlannedIntervention> plan,
                std::shared_ptr<ScenarioField> field, std::uint64_t seed);
  void before_tick(std::size_t t, const World& world, std::vector<Event>& events) override;
  void annotate(LogHeader& header) const override;

 private:
  ScenarioScript script_;
  std::vector<PlannedIntervention> plan_;
  std::shared_ptr<ScenarioField> field_;
  std::uint64_t seed_;
};

/// Everything needed to run one round, headless or live.
struct ScenarioSession {
  SessionConfig config;
  std::shared_ptr<ScenarioField> field;
  std::unique_ptr<ScenarioHooks> hooks;
  std::vector<PlannedIntervention> plan;
};

/// Seat 0 is the participant; seats 1-2 are wall bots and 3-4 center bots.
/// In non-social rounds the bots are ghosts.
ScenarioSession make_scenario(const ScenarioScript& script, const SeatConfig& participant,
                              std::uint64_t seed);

ReplayLog run_exp2_scenario(const ScenarioScript& script, const SeatConfig& participant,
                            std::uint64_t seed);

}  // namespace csense
