#include <doctest.h>

#include <array>
#include <cmath>

#include "csense/engine.hpp"
#include "csense/rng.hpp"
#include "csense/scorefield.hpp"

using namespace csense;

namespace {

const ControlScheme kClick = ControlScheme::click_steer();
const ControlScheme kTurn = ControlScheme::turn_keys();

class ConstField final : public FieldSource {
 public:
  explicit ConstField(double v) : v_(v) {}
  double value(Point, std::size_t) const override { return v_; }
  std::vector<Point> centers(std::size_t) const override { return {}; }
  std::size_t duration() const override { return 1000; }
  bool graded() const override { return v_ != 0.0 && v_ != 1.0; }

 private:
  double v_;
};

}  // namespace

TEST_CASE("click orients toward the click and records the destination") {
  const auto a = make_avatar(0, {100, 100}, 90);
  const auto b = apply_input(a, Input::click({200, 100}), kClick);
  CHECK(b.heading == doctest::Approx(0.0));
  REQUIRE(b.destination);
  CHECK(*b.destination == Point{200, 100});
  const auto c = apply_input(a, Input::click({100, 50}), kClick);
  CHECK(c.heading == doctest::Approx(-90.0));  // up the screen
}

TEST_CASE("click targets are quantised to the log grid") {
  const auto a = apply_input(make_avatar(0, {10, 10}, 0), Input::click({100.12345, 50.98765}), kClick);
  CHECK(a.destination->x == 100.123);
  CHECK(a.destination->y == 50.988);
}

TEST_CASE("click-steer speeds: slow by default, a fast, s stop") {
  auto a = make_avatar(0, {100, 100}, 0);
  auto step = [&](const AvatarState& s) { return distance(step_avatar(s, kClick).pos, s.pos); };
  CHECK(step(a) == doctest::Approx(kSlowStep));
  a = apply_input(a, Input::press(Key::a), kClick);
  CHECK(step(a) == doctest::Approx(kFastStep));
  a = apply_input(a, Input::press(Key::s), kClick);
  CHECK(step(a) == 0.0);  // stop wins while both are held
  a = apply_input(a, Input::release(Key::s), kClick);
  CHECK(step(a) == doctest::Approx(kFastStep));
  a = apply_input(a, Input::release(Key::a), kClick);
  CHECK(step(a) == doctest::Approx(kSlowStep));
  CHECK(kSlowStep == 2.125);
  CHECK(kFastStep == 7.125);
}

TEST_CASE("turn-keys: arrows turn 5 degrees per tick, space is fast, no stop") {
  auto a = make_avatar(0, {240, 140}, 0);
  a = apply_input(a, Input::press(Key::right), kTurn);
  auto b = step_avatar(a, kTurn);
  CHECK(b.heading == doctest::Approx(5.0));
  b = step_avatar(b, kTurn);
  CHECK(b.heading == doctest::Approx(10.0));
  b = apply_input(b, Input::release(Key::right), kTurn);
  b = apply_input(b, Input::press(Key::left), kTurn);
  b = step_avatar(b, kTurn);
  CHECK(b.heading == doctest::Approx(5.0));
  b = apply_input(b, Input::press(Key::right), kTurn);  // both held cancel
  CHECK(step_avatar(b, kTurn).heading == doctest::Approx(5.0));
  auto f = apply_input(make_avatar(0, {240, 140}, 0), Input::press(Key::space), kTurn);
  CHECK(distance(step_avatar(f, kTurn).pos, f.pos) == doctest::Approx(kFastStep));
}

TEST_CASE("illegal inputs throw and leave the state untouched") {
  const auto a = make_avatar(0, {10, 10}, 0);
  CHECK_THROWS_AS(apply_input(a, Input::click({5, 5}), kTurn), InputError);
  CHECK_THROWS_AS(apply_input(a, Input::press(Key::left), kClick), InputError);
  CHECK_THROWS_AS(apply_input(a, Input::press(Key::space), kClick), InputError);
  CHECK_THROWS_AS(apply_input(a, Input::press(Key::s), kTurn), InputError);
  CHECK_THROWS_AS(apply_input(a, Input::press(Key::a), kTurn), InputError);
  CHECK_THROWS_AS(apply_input(a, Input::click({500, 5}), kClick), InputError);
  CHECK_THROWS_AS(key_from_string("q"), InputError);
  for (Key k : {Key::a, Key::s, Key::left, Key::right, Key::space}) CHECK(key_from_string(to_string(k)) == k);
}

TEST_CASE("arrival clears the destination and motion continues forward") {
  auto a = apply_input(make_avatar(0, {100, 100}, 0), Input::click({110, 100}), kClick);
  int ticks = 0;
  while (a.destination && ticks < 20) {
    a = step_avatar(a, kClick);
    ++ticks;
  }
  CHECK(ticks == 4);  // 8.5 px covers the arrival radius around x = 110
  const auto b = step_avatar(a, kClick);
  CHECK(b.pos.x == doctest::Approx(a.pos.x + kSlowStep));
  CHECK(b.heading == a.heading);
}

TEST_CASE("fast motion cannot skip past a destination") {
  auto a = apply_input(make_avatar(0, {100, 100}, 0), Input::click({103, 100}), kClick);
  a = apply_input(a, Input::press(Key::a), kClick);
  a = step_avatar(a, kClick);
  CHECK_FALSE(a.destination);
  CHECK(a.pos.x == doctest::Approx(100 + kFastStep));
}

TEST_CASE("walls clamp motion and flag contact") {
  auto a = make_avatar(0, {479, 100}, 0);
  a = step_avatar(a, kClick);
  CHECK(a.pos.x == 480.0);
  CHECK(a.wall);
  const auto stopped = apply_input(a, Input::press(Key::s), kClick);
  CHECK_FALSE(step_avatar(stopped, kClick).wall);
  auto away = make_avatar(0, {480, 100}, 180);
  CHECK_FALSE(step_avatar(away, kClick).wall);
}

TEST_CASE("property: avatars never leave the arena") {
  Rng r(1);
  const Arena arena;
  for (int trial = 0; trial < 50; ++trial) {
    const bool turn = trial % 2;
    const auto& sch = turn ? kTurn : kClick;
    auto a = make_avatar(0, {r.uniform(0, 480), r.uniform(0, 285)}, r.uniform(-180, 180));
    for (int t = 0; t < 400; ++t) {
      if (r.bernoulli(0.1)) {
        if (turn) {
          const Key k = std::array{Key::left, Key::right, Key::space}[r.below(3)];
          a = apply_input(a, r.bernoulli(0.5) ? Input::press(k) : Input::release(k), sch);
        } else if (r.bernoulli(0.7)) {
          a = apply_input(a, Input::click({r.uniform(0, 480), r.uniform(0, 285)}), sch);
        } else {
          const Key k = r.bernoulli(0.5) ? Key::a : Key::s;
          a = apply_input(a, r.bernoulli(0.5) ? Input::press(k) : Input::release(k), sch);
        }
      }
      const auto prev = a.pos;
      a = step_avatar(a, sch);
      REQUIRE(arena.contains(a.pos));
      REQUIRE(distance(prev, a.pos) <= a.speed_px_s() * kTickSeconds + 1e-9);
      REQUIRE(std::abs(std::hypot(a.dir.x, a.dir.y) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("turn-keys heading stays locked to the 5 degree quantum") {
  auto a = apply_input(make_avatar(0, {240, 140}, 0), Input::press(Key::right), kTurn);
  for (int i = 0; i < 72; ++i) a = step_avatar(a, kTurn);
  CHECK(a.heading == doctest::Approx(0.0).scale(1.0));
  CHECK(a.dir.x == doctest::Approx(1.0));
  CHECK(a.dir.y == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("scoring: reward plus activity bonus, nothing at the wall") {
  ConstField one(1.0), half(0.5);
  auto a = make_avatar(0, {100, 100}, 0);
  auto s = score_tick(a, one, 0);
  CHECK(s.reward == 1.0);
  CHECK(s.increment == doctest::Approx(1.0 + 2.0 / 3.0 / 8.0));
  CHECK(a.score == doctest::Approx(1.0 + 1.0 / 12.0));
  score_tick(a, half, 1);
  CHECK(a.reward == 0.5);
  a.wall = true;
  const double before = a.score;
  s = score_tick(a, one, 2);
  CHECK(s.reward == 0.0);
  CHECK(a.score == before);
  // 8 ticks of bonus are 2/3 point.
  auto idle = make_avatar(1, {1, 1}, 0);
  ConstField zero(0.0);
  for (std::size_t t = 0; t < 8; ++t) score_tick(idle, zero, t);
  CHECK(idle.score == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("plan_inputs realises decisions under click-steer") {
  auto a = make_avatar(0, {100, 100}, 0);
  Decision go;
  go.destination = Point{300, 200};
  go.accelerate = true;
  auto inputs = plan_inputs(go, a, kClick);
  for (const auto& in : inputs) a = apply_input(a, in, kClick);
  CHECK(a.destination);
  CHECK(a.keys.has(Key::a));
  inputs = plan_inputs(Decision::exploit(), a, kClick);
  for (const auto& in : inputs) a = apply_input(a, in, kClick);
  CHECK(a.speed == SpeedLevel::stop);
  // Repeating a satisfied decision emits nothing.
  CHECK(plan_inputs(Decision::exploit(), a, kClick).empty());
}

TEST_CASE("plan_inputs under turn-keys: exploit spins, travel steers") {
  auto a = make_avatar(0, {240, 140}, 0);
  for (const auto& in : plan_inputs(Decision::exploit(), a, kTurn)) a = apply_input(a, in, kTurn);
  CHECK(a.speed == SpeedLevel::slow);
  CHECK(a.keys.has(Key::left) != a.keys.has(Key::right));
  Decision go;
  go.destination = Point{400, 140};
  go.accelerate = true;
  a = make_avatar(0, {100, 140}, 90);
  double d0 = distance(a.pos, *go.destination);
  for (int t = 0; t < 80; ++t) {
    for (const auto& in : plan_inputs(go, a, kTurn)) a = apply_input(a, in, kTurn);
    a = step_avatar(a, kTurn);
  }
  CHECK(distance(a.pos, *go.destination) < d0 / 4);
}

TEST_CASE("key set bit operations") {
  KeySet k;
  CHECK(k.empty());
  k.set(Key::left, true);
  k.set(Key::space, true);
  CHECK(k.has(Key::left));
  CHECK_FALSE(k.has(Key::right));
  k.set(Key::left, false);
  CHECK(k.bits() == (1u << static_cast<int>(Key::space)));
}
