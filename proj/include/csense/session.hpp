#pragma once
// Fixed-tick session core. The headless runner and the live server both
// drive a SessionRunner, so a bot-only live session produces the same log as
// a headless run with the same configuration and seed.

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "csense/engine.hpp"
#include "csense/replay.hpp"
#include "csense/scorefield.hpp"
#include "csense/strategies.hpp"

namespace csense {

class SessionAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SeatConfig {
  StrategyKind strategy = StrategyKind::asocial;
  StrategyParams params{};
  std::vector<int> peers;  // bots: same-class peer ids
  bool ghost = false;      // simulated but invisible to non-ghost seats

  friend bool operator==(const SeatConfig&, const SeatConfig&) = default;
};

inline constexpr std::size_t kMaxGroupSize = 64;

struct SessionConfig {
  Arena arena{};
  FieldSpec field{};
  int field_id = 0;
  std::size_t duration = 2400;
  ControlScheme scheme = ControlScheme::click_steer();
  std::vector<SeatConfig> seats;
  std::uint64_t seed = 0;
  bool log_beliefs = false;  // dump social-inference posteriors as events

  std::size_t group_size() const;  // visible (non-ghost) seats
  void validate() const;
};

void to_json(nlohmann::json& j, const SessionConfig& c);
void from_json(const nlohmann::json& j, SessionConfig& c);
void to_json(nlohmann::json& j, const FieldSpec& f);
void from_json(const nlohmann::json& j, FieldSpec& f);

/// Homogeneous group of `n` seats running one strategy.
std::vector<SeatConfig> homogeneous_seats(StrategyKind kind, const StrategyParams& params, std::size_t n);

/// Mutable simulation state: avatars, tick clock and per-observer views.
class World {
 public:
  World(const SessionConfig& config, const FieldSource& field);

  std::size_t tick() const { return t_; }
  bool finished() const { return t_ >= duration_; }
  std::span<const AvatarState> avatars() const { return avatars_; }
  const AvatarState& avatar(std::size_t seat) const { return avatars_.at(seat); }
  bool active(std::size_t seat) const { return active_.at(seat) != 0; }
  bool ghost(std::size_t seat) const { return ghost_.at(seat) != 0; }
  std::size_t seats() const { return avatars_.size(); }
  std::size_t active_visible() const;
  const ControlScheme& scheme() const { return scheme_; }
  const Arena& arena() const { return arena_; }
  const FieldSource& field() const { return *field_; }

  /// Fills `out` with what seat may see at the current tick.
  void observe(std::size_t seat, AgentObservation& out) const;

  /// Applies an input to a seat's avatar. Throws InputError if illegal.
  void apply(std::size_t seat, const Input& input);

  /// Steps and scores every active avatar, then advances the clock.
  void advance();

  void deactivate(std::size_t seat) { active_.at(seat) = 0; }

  /// Snapshot of the tick just completed, in log form.
  TickRecord record(std::vector<Event> events) const;

 private:
  Arena arena_;
  ControlScheme scheme_;
  const FieldSource* field_;
  std::size_t duration_;
  std::size_t t_ = 0;
  std::vector<AvatarState> avatars_;
  std::vector<char> active_;
  std::vector<char> ghost_;
};

/// Receives the session as it runs.
class TickSink {
 public:
  virtual ~TickSink() = default;
  virtual void on_start(const LogHeader&) {}
  /// Called after each tick with the completed state and that tick's events.
  virtual void on_tick(const World& world, std::span<const Event> events) = 0;
  virtual void on_end(const World&) {}
};

/// Collects a full ReplayLog.
class LogSink final : public TickSink {
 public:
  void on_start(const LogHeader& h) override { log_.header = h; }
  void on_tick(const World& world, std::span<const Event> events) override;
  ReplayLog& log() { return log_; }
  ReplayLog take() { return std::move(log_); }

 private:
  ReplayLog log_;
};

/// Per-tick extension point (scenario scripts): may edit scenario-owned
/// fields and add events before the seats act.
class SessionHooks {
 public:
  virtual ~SessionHooks() = default;
  virtual void before_tick(std::size_t t, const World& world, std::vector<Event>& events) = 0;
  /// Adds scenario details to the log header.
  virtual void annotate(LogHeader&) const {}
};

struct ExternalInput {
  std::size_t seat = 0;
  Input input{};
};

/// Drives a World tick by tick. Seats with a strategy decide internally;
/// seats without one (live humans) are fed through `tick` inputs.
class SessionRunner {
 public:
  SessionRunner(SessionConfig config, std::shared_ptr<const FieldSource> field,
                std::vector<std::unique_ptr<Strategy>> strategies, TickSink* sink,
                SessionHooks* hooks = nullptr);

  /// Emits the header and the join events recorded with tick 0.
  void start(std::span<const std::string> seat_labels = {});

  /// Runs one tick. External inputs apply first, at the start of the tick,
  /// then strategy seats decide. Returns the number of rejected external
  /// inputs. Throws SessionAborted if a strategy emits an illegal input.
  std::size_t tick(std::span<const ExternalInput> external = {});

  /// Removes a seat; the drop event is recorded with the next tick.
  void remove_seat(std::size_t seat, std::string reason);

  bool finished() const { return world_.finished(); }
  const World& world() const { return world_; }
  const SessionConfig& config() const { return config_; }
  LogHeader header() const;
  void finish();

 private:
  void drive_seat(std::size_t seat);

  SessionConfig config_;
  std::shared_ptr<const FieldSource> field_;
  World world_;
  std::vector<std::unique_ptr<Strategy>> strategies_;
  std::vector<Rng> rngs_;
  TickSink* sink_;
  SessionHooks* hooks_;
  std::vector<Event> events_;
  AgentObservation obs_;
  bool started_ = false;
  bool ended_ = false;
};

/// Builds the strategies named by the seat configuration.
std::vector<std::unique_ptr<Strategy>> build_strategies(const SessionConfig& config);

/// Default seat labels written into join events ("agent" or "bot").
std::vector<std::string> default_seat_labels(const SessionConfig& config);

/// Headless run of a configuration against a pre-built field.
void run_session(const SessionConfig& config, std::shared_ptr<const FieldSource> field, TickSink& sink,
                 SessionHooks* hooks = nullptr);

/// Headless run that builds the field from config.field and returns the log.
ReplayLog run_session(const SessionConfig& config);

/// Re-executes a log's recorded input stream (held keys and clicks) through
/// the engine and returns the regenerated log. Used to check that a log is
/// self-consistent.
ReplayLog replay_inputs(const ReplayLog& log, std::shared_ptr<const FieldSource> field);

}  // namespace csense
