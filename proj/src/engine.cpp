#include "csense/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace csense {

namespace {
// Rotation by one 5 degree turn quantum. Literal constants keep turning
// independent of the platform's libm.
constexpr double kCos5 = 0.99619469809174553229501040247389;
constexpr double kSin5 = 0.08715574274765817355806427083747;

Point rotate_quantum(Point d, int sign) {
  const double s = sign * kSin5;
  Point r{d.x * kCos5 - d.y * s, d.x * s + d.y * kCos5};
  const double n = std::sqrt(r.x * r.x + r.y * r.y);
  return {r.x / n, r.y / n};
}
}  // namespace

std::string_view to_string(Key k) {
  switch (k) {
    case Key::a: return "a";
    case Key::s: return "s";
    case Key::left: return "left";
    case Key::right: return "right";
    case Key::space: return "space";
  }
  return "?";
}

Key key_from_string(std::string_view s) {
  for (auto k : {Key::a, Key::s, Key::left, Key::right, Key::space})
    if (to_string(k) == s) return k;
  throw InputError(fmt::format("unknown key '{}'", s));
}

std::string_view to_string(SchemeKind k) {
  return k == SchemeKind::click_steer ? "click-steer" : "turn-keys";
}

SchemeKind scheme_from_string(std::string_view s) {
  if (s == "click-steer") return SchemeKind::click_steer;
  if (s == "turn-keys") return SchemeKind::turn_keys;
  throw InputError(fmt::format("unknown control scheme '{}'", s));
}

std::string_view to_string(Intent i) {
  switch (i) {
    case Intent::explore: return "explore";
    case Intent::exploit: return "exploit";
    case Intent::copy: return "copy";
  }
  return "?";
}

bool ControlScheme::key_legal(Key k) const {
  if (kind == SchemeKind::click_steer) return k == Key::a || k == Key::s;
  return k == Key::left || k == Key::right || k == Key::space;
}

SpeedLevel speed_for_keys(KeySet keys, const ControlScheme& scheme) {
  if (scheme.kind == SchemeKind::click_steer) {
    if (keys.has(Key::s)) return SpeedLevel::stop;
    return keys.has(Key::a) ? SpeedLevel::fast : SpeedLevel::slow;
  }
  return keys.has(Key::space) ? SpeedLevel::fast : SpeedLevel::slow;
}

AvatarState make_avatar(int id, Point pos, double heading_deg) {
  AvatarState a;
  a.id = id;
  a.pos = pos;
  a.heading = wrap_degrees(heading_deg);
  const double rad = a.heading * kPi / 180.0;
  a.dir = {std::cos(rad), std::sin(rad)};
  return a;
}

AvatarState apply_input(const AvatarState& avatar, const Input& input, const ControlScheme& scheme,
                        const Arena& arena) {
  AvatarState next = avatar;
  if (input.kind == Input::Kind::click) {
    if (scheme.kind != SchemeKind::click_steer)
      throw InputError("click input is not available under turn-keys control");
    const Point target{quantize_milli(input.at.x), quantize_milli(input.at.y)};
    if (!arena.contains(target))
      throw InputError(fmt::format("click ({}, {}) outside playing area", target.x, target.y));
    const double dx = target.x - avatar.pos.x;
    const double dy = target.y - avatar.pos.y;
    const double n = std::sqrt(dx * dx + dy * dy);
    if (n > 0.0) {
      next.dir = {dx / n, dy / n};
      next.heading = wrap_degrees(std::atan2(dy, dx) * 180.0 / kPi);
    }
    next.destination = target;
    return next;
  }
  if (!scheme.key_legal(input.key))
    throw InputError(fmt::format("key '{}' is not available under {}", to_string(input.key),
                                 to_string(scheme.kind)));
  next.keys.set(input.key, input.down);
  next.speed = speed_for_keys(next.keys, scheme);
  return next;
}

AvatarState step_avatar(const AvatarState& avatar, const ControlScheme& scheme, const Arena& arena) {
  AvatarState next = avatar;
  next.speed = speed_for_keys(avatar.keys, scheme);
  if (scheme.kind == SchemeKind::turn_keys) {
    const bool left = avatar.keys.has(Key::left);
    const bool right = avatar.keys.has(Key::right);
    if (left != right) {
      const int sign = right ? 1 : -1;
      next.dir = rotate_quantum(avatar.dir, sign);
      next.heading = wrap_degrees(avatar.heading + sign * scheme.turn_per_tick());
    }
  }
  const double step = next.speed_px_s() * kTickSeconds;
  const Point from = avatar.pos;
  Point to{from.x + next.dir.x * step, from.y + next.dir.y * step};
  const Point clamped{std::clamp(to.x, 0.0, arena.width), std::clamp(to.y, 0.0, arena.height)};
  next.wall = step > 0.0 && (clamped.x != to.x || clamped.y != to.y);
  next.pos = clamped;

  if (next.destination) {
    const double d = step > 0.0 ? segment_distance(*next.destination, from, next.pos)
                                : distance(*next.destination, next.pos);
    if (d <= kArrivalRadius) next.destination.reset();
  }
  return next;
}

namespace {
TickScore apply_score(AvatarState& avatar, double value) {
  TickScore s;
  if (avatar.wall) {
    s.reward = 0.0;
    s.increment = 0.0;
  } else {
    s.reward = value;
    s.increment = s.reward + kActivityBonusPerTick;
  }
  avatar.reward = s.reward;
  avatar.score += s.increment;
  return s;
}
}  // namespace

TickScore score_tick(AvatarState& avatar, const FieldSource& field, std::size_t t) {
  return apply_score(avatar, avatar.wall ? 0.0 : field.value(avatar.pos, t));
}

TickScore score_tick(AvatarState& avatar, const FieldSource& field, std::size_t t, std::size_t seat) {
  return apply_score(avatar, avatar.wall ? 0.0 : field.value_for(seat, avatar.pos, t));
}

std::vector<Input> plan_inputs(const Decision& d, const AvatarState& avatar,
                               const ControlScheme& scheme) {
  std::vector<Input> out;
  auto want = [&](Key k, bool down) {
    if (avatar.keys.has(k) != down) out.push_back(down ? Input::press(k) : Input::release(k));
  };

  if (scheme.kind == SchemeKind::click_steer) {
    want(Key::s, d.stop);
    want(Key::a, !d.stop && d.accelerate);
    if (!d.stop && d.destination) {
      const Point q{quantize_milli(d.destination->x), quantize_milli(d.destination->y)};
      if (!avatar.destination || !(*avatar.destination == q)) out.push_back(Input::click(q));
    }
    return out;
  }

  // Turn-keys: no stop is available, so holding position means spinning slowly.
  if (d.stop) {
    const bool spin_right = avatar.keys.has(Key::right) && !avatar.keys.has(Key::left);
    want(Key::space, false);
    want(Key::left, !spin_right);
    want(Key::right, spin_right);
    return out;
  }
  bool turn_left = false;
  bool turn_right = false;
  bool fast = d.accelerate;
  if (d.destination) {
    const double off = wrap_degrees(degrees_toward(avatar.pos, *d.destination) - avatar.heading);
    const double half_quantum = scheme.turn_per_tick() / 2.0;
    turn_right = off > half_quantum;
    turn_left = off < -half_quantum;
    // Tighten the turning circle for sharp turns toward nearby goals.
    if (std::abs(off) > 45.0 && distance(avatar.pos, *d.destination) < 150.0) fast = false;
    if (turn_left || turn_right) {
      // A goal inside the slow turning circle can only be orbited; go
      // straight until it is reachable.
      const double radius = kSlowStep / (scheme.turn_per_tick() * kPi / 180.0);
      const double side = (avatar.heading + (turn_right ? 90.0 : -90.0)) * kPi / 180.0;
      const Point centre{avatar.pos.x + radius * std::cos(side), avatar.pos.y + radius * std::sin(side)};
      if (distance(centre, *d.destination) < radius) {
        turn_left = turn_right = false;
        fast = d.accelerate;
      }
    }
  }
  want(Key::left, turn_left);
  want(Key::right, turn_right);
  want(Key::space, fast);
  return out;
}

}  // namespace csense
