#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "csense/rng.hpp"
#include "csense/scorefield.hpp"

using namespace csense;

TEST_CASE("spotlight value is a closed disk of radius 25") {
  const Point c{100, 100};
  CHECK(spotlight_value(c, c) == 1.0);
  CHECK(spotlight_value(c, {125, 100}) == 1.0);
  CHECK(spotlight_value(c, {125.001, 100}) == 0.0);
  CHECK(spotlight_value(c, {100 + 25 / std::sqrt(2.0) - 1e-9, 100 + 25 / std::sqrt(2.0) - 1e-9}) == 1.0);
}

TEST_CASE("default prior equals the spotlight area fraction") {
  const Arena a;
  const double frac = kPi * kSpotlightRadius * kSpotlightRadius / a.area();
  CHECK(frac == doctest::Approx(0.0144).epsilon(0.01));
}

TEST_CASE("spotlight path: duration, speed bound and inset") {
  const Arena a;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = generate_spotlight_path(seed, a, kSlowSpeed, 2400);
    REQUIRE(p.duration() == 2400);
    for (std::size_t t = 0; t < p.duration(); ++t) {
      const Point c = p.center(t);
      REQUIRE(c.x >= kSpotlightRadius - 1e-9);
      REQUIRE(c.x <= a.width - kSpotlightRadius + 1e-9);
      REQUIRE(c.y >= kSpotlightRadius - 1e-9);
      REQUIRE(c.y <= a.height - kSpotlightRadius + 1e-9);
      if (t > 0) REQUIRE(distance(c, p.center(t - 1)) <= kSlowStep + 1e-9);
    }
  }
}

TEST_CASE("spotlight path is a pure function of its seed") {
  const auto a = generate_spotlight_path(5, {}, kSlowSpeed, 500);
  const auto b = generate_spotlight_path(5, {}, kSlowSpeed, 500);
  const auto c = generate_spotlight_path(6, {}, kSlowSpeed, 500);
  CHECK(a.centers == b.centers);
  CHECK(a.centers != c.centers);
}

TEST_CASE("spotlight path honours an explicit start") {
  const auto p = generate_spotlight_path(1, {}, kSlowSpeed, 10, Point{200, 100});
  CHECK(p.center(0) == Point{200, 100});
  const auto clamped = generate_spotlight_path(1, {}, kSlowSpeed, 10, Point{0, 0});
  CHECK(clamped.center(0) == Point{kSpotlightRadius, kSpotlightRadius});
}

TEST_CASE("wall path stays on the perimeter") {
  const Arena a;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto p = generate_wall_path(seed, a, kSlowSpeed, 3000);
    for (std::size_t t = 0; t < p.duration(); ++t) {
      const Point c = p.center(t);
      const double edge = std::min({c.x, a.width - c.x, c.y, a.height - c.y});
      REQUIRE(edge == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
      if (t > 0) REQUIRE(distance(c, p.center(t - 1)) <= kSlowStep + 1e-9);
    }
  }
}

TEST_CASE("noise grid is normalised per tick and temporally correlated") {
  NoiseParams np;
  np.seed = 77;
  const NoiseGrid g(np, {}, 300);
  double lag1 = 0;
  for (std::size_t t = 0; t < 300; ++t) {
    const auto n = g.tick_nodes(t);
    const auto [lo, hi] = std::minmax_element(n.begin(), n.end());
    REQUIRE(*lo == doctest::Approx(0.0));
    REQUIRE(*hi == doctest::Approx(1.0));
    if (t > 0) {
      const auto m = g.tick_nodes(t - 1);
      double d = 0;
      for (std::size_t i = 0; i < n.size(); ++i) d += std::abs(n[i] - m[i]);
      lag1 += d / n.size();
    }
  }
  // Consecutive ticks differ far less than independent uniform draws (1/3).
  CHECK(lag1 / 299 < 0.1);
  Rng r(1);
  for (int i = 0; i < 500; ++i) {
    const double v = g.value({r.uniform(0, 480), r.uniform(0, 285)}, r.below(300));
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
  }
  CHECK_THROWS_AS(g.value({-1, 0}, 0), FieldError);
  CHECK_THROWS_AS(g.value({0, 0}, 300), FieldError);
}

TEST_CASE("gaussian taps are normalised and symmetric") {
  const auto taps = gaussian_taps(1.5);
  REQUIRE(taps.size() % 2 == 1);
  double s = 0;
  for (double t : taps) s += t;
  CHECK(s == doctest::Approx(1.0));
  for (std::size_t i = 0; i < taps.size() / 2; ++i) CHECK(taps[i] == doctest::Approx(taps[taps.size() - 1 - i]));
}

TEST_CASE("noisy blend mixes the spotlight and the noise linearly") {
  for (double w : {0.1, 0.25}) {
    const auto spec = standard_field(FieldKind::noisy_blend, 0, 100, w);
    const auto f = ScoreField::build(spec);
    CHECK(f.graded());
    Rng r(3);
    for (int i = 0; i < 200; ++i) {
      const Point p{r.uniform(0, 480), r.uniform(0, 285)};
      const std::size_t t = r.below(100);
      const double expected = (1 - w) * spotlight_value(f.path()->center(t), p) + w * f.noise()->value(p, t);
      REQUIRE(f.value(p, t) == expected);
    }
  }
}

TEST_CASE("standard fields share spotlight paths across noise conditions") {
  const auto lo = ScoreField::build(standard_field(FieldKind::noisy_blend, 2, 200, 0.10));
  const auto hi = ScoreField::build(standard_field(FieldKind::noisy_blend, 2, 200, 0.25));
  const auto spot = ScoreField::build(standard_field(FieldKind::spotlight, 2, 200));
  CHECK(lo.path()->centers == hi.path()->centers);
  CHECK(lo.path()->centers == spot.path()->centers);
  const auto other = ScoreField::build(standard_field(FieldKind::spotlight, 3, 200));
  CHECK(other.path()->centers != spot.path()->centers);
}

TEST_CASE("binary fields, zero field and superposition") {
  const auto spot = ScoreField::build(standard_field(FieldKind::spotlight, 0, 50));
  CHECK_FALSE(spot.graded());
  CHECK(spot.centers(0).size() == 1);
  FieldSpec z;
  z.kind = FieldKind::zero;
  z.duration = 50;
  const auto zero = ScoreField::build(z);
  CHECK(zero.value({10, 10}, 3) == 0.0);
  CHECK(zero.centers(0).empty());

  FieldSpec sup;
  sup.kind = FieldKind::superposed;
  sup.duration = 50;
  sup.components = {standard_field(FieldKind::spotlight, 0, 50), standard_field(FieldKind::wall_follow, 1, 50)};
  const auto s = ScoreField::build(sup);
  CHECK(s.centers(10).size() == 2);
  for (const Point c : s.centers(10)) CHECK(s.value(c, 10) == 1.0);
}

TEST_CASE("field spec validation") {
  FieldSpec f;
  f.duration = 0;
  CHECK_THROWS_AS(f.validate(), FieldError);
  f = {};
  f.noise_weight = 0.2;
  CHECK_THROWS_AS(f.validate(), FieldError);
  f.kind = FieldKind::noisy_blend;
  f.noise_weight = 1.5;
  CHECK_THROWS_AS(f.validate(), FieldError);
  f.noise_weight = 0.25;
  CHECK_NOTHROW(f.validate());
  f = {};
  f.kind = FieldKind::superposed;
  CHECK_THROWS_AS(f.validate(), FieldError);
  CHECK_THROWS_AS(field_kind_from_string("lava"), FieldError);
  CHECK(field_kind_from_string(to_string(FieldKind::noisy_blend)) == FieldKind::noisy_blend);
}

TEST_CASE("out-of-range queries throw") {
  const auto f = ScoreField::build(standard_field(FieldKind::spotlight, 0, 20));
  CHECK_THROWS_AS(f.value({10, 10}, 20), FieldError);
  CHECK_THROWS_AS(f.value({481, 10}, 0), FieldError);
  CHECK_NOTHROW(f.value({480, 285}, 19));
}

TEST_CASE("path export lists one line per tick") {
  const auto p = generate_spotlight_path(1, {}, kSlowSpeed, 5);
  const auto text = path_to_lines(p);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
  CHECK(text.rfind("0\t", 0) == 0);
}
