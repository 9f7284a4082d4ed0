#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "csense/geometry.hpp"
#include "csense/scorefield.hpp"

namespace csense {

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Key : std::uint8_t { a, s, left, right, space };

std::string_view to_string(Key k);
Key key_from_string(std::string_view s);

/// Set of held keys.
class KeySet {
 public:
  constexpr KeySet() = default;
  constexpr bool has(Key k) const { return (bits_ >> static_cast<int>(k)) & 1u; }
  constexpr void set(Key k, bool down) {
    const auto m = static_cast<std::uint8_t>(1u << static_cast<int>(k));
    bits_ = down ? static_cast<std::uint8_t>(bits_ | m) : static_cast<std::uint8_t>(bits_ & ~m);
  }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  friend constexpr bool operator==(KeySet, KeySet) = default;

 private:
  std::uint8_t bits_ = 0;
};

enum class SchemeKind { click_steer, turn_keys };

std::string_view to_string(SchemeKind k);
SchemeKind scheme_from_string(std::string_view s);

struct ControlScheme {
  SchemeKind kind = SchemeKind::click_steer;
  double turn_rate = 40.0;  // deg/s, turn-keys only
  bool stop_allowed = true;

  static ControlScheme click_steer() { return {SchemeKind::click_steer, 40.0, true}; }
  static ControlScheme turn_keys() { return {SchemeKind::turn_keys, 40.0, false}; }
  static ControlScheme of(SchemeKind k) { return k == SchemeKind::click_steer ? click_steer() : turn_keys(); }

  double turn_per_tick() const { return turn_rate * kTickSeconds; }
  bool key_legal(Key k) const;

  friend bool operator==(const ControlScheme&, const ControlScheme&) = default;
};

enum class SpeedLevel : std::uint8_t { stop, slow, fast };

constexpr double speed_px_per_s(SpeedLevel s) {
  return s == SpeedLevel::stop ? 0.0 : (s == SpeedLevel::slow ? kSlowSpeed : kFastSpeed);
}

/// Speed level implied by the held keys. Stop wins over accelerate when both
/// are held under click-steer.
SpeedLevel speed_for_keys(KeySet keys, const ControlScheme& scheme);

struct AvatarState {
  int id = 0;
  Point pos{};
  double heading = 0.0;  // degrees, 0 = +x, positive turns clockwise on screen
  Point dir{1.0, 0.0};   // unit vector matching heading; drives motion
  SpeedLevel speed = SpeedLevel::slow;
  std::optional<Point> destination;
  KeySet keys{};
  bool wall = false;
  double reward = 0.0;  // r_t
  double score = 0.0;   // cumulative, includes the activity bonus

  double speed_px_s() const { return speed_px_per_s(speed); }
};

/// Places an avatar with the given heading; `dir` is derived from it.
AvatarState make_avatar(int id, Point pos, double heading_deg);

struct Input {
  enum class Kind { click, key };
  Kind kind = Kind::click;
  Point at{};  // click target
  Key key = Key::a;
  bool down = true;

  static Input click(Point p) { return {Kind::click, p, Key::a, true}; }
  static Input press(Key k) { return {Kind::key, {}, k, true}; }
  static Input release(Key k) { return {Kind::key, {}, k, false}; }
};

/// Applies one input. Throws InputError for inputs the scheme does not allow
/// (the state is left untouched in that case). Click targets are quantised to
/// the 1/1000 px log grid so replays reproduce them exactly.
AvatarState apply_input(const AvatarState& avatar, const Input& input, const ControlScheme& scheme,
                        const Arena& arena = {});

/// Arrival radius for click-steer destinations: one slow tick of travel.
inline constexpr double kArrivalRadius = kSlowStep;

/// Advances one tick: turning (turn-keys), translation, wall clamping and
/// destination arrival.
AvatarState step_avatar(const AvatarState& avatar, const ControlScheme& scheme,
                        const Arena& arena = {});

/// 2/3 point per second of active play, paid per tick.
inline constexpr double kActivityBonusPerTick = (2.0 / 3.0) / kTicksPerSecond;

struct TickScore {
  double reward = 0.0;
  double increment = 0.0;
};

/// Reward for the avatar's position at tick t and the cumulative update.
TickScore score_tick(AvatarState& avatar, const FieldSource& field, std::size_t t);
/// Same, sampling the field as seen by `seat`.
TickScore score_tick(AvatarState& avatar, const FieldSource& field, std::size_t t, std::size_t seat);

/// Pose of another agent as anyone can see it.
struct PublicPose {
  int id = 0;
  Point pos{};
  double heading = 0.0;
  double speed = 0.0;  // px/s as displayed
};

inline PublicPose public_pose(const AvatarState& a) {
  return {a.id, a.pos, a.heading, a.speed_px_s()};
}

/// Everything one agent may condition on at a tick. Other agents' rewards and
/// scores are absent by construction.
struct AgentObservation {
  std::size_t t = 0;
  AvatarState self{};
  std::vector<PublicPose> others;
  ControlScheme scheme{};
  Arena arena{};
  bool graded_field = false;
};

enum class Intent : std::uint8_t { explore, exploit, copy };

std::string_view to_string(Intent i);

/// An agent's per-tick action, expressed as the desired control state:
/// where to head, whether to hold position and whether to go fast.
struct Decision {
  std::optional<Point> destination;
  bool stop = false;
  bool accelerate = false;
  Intent intent = Intent::explore;
  int target = -1;  // copy target id

  static Decision exploit() { return {std::nullopt, true, false, Intent::exploit, -1}; }
};

/// Translates a Decision into the concrete inputs needed under the scheme,
/// given the avatar's current state. Under turn-keys the destination is
/// steered toward with the arrow keys and "stop" becomes a tight spin.
std::vector<Input> plan_inputs(const Decision& d, const AvatarState& avatar,
                               const ControlScheme& scheme);

}  // namespace csense
