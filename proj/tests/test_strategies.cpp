#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "csense/strategies.hpp"

using namespace csense;

namespace {

AgentObservation observe(Point self, std::vector<PublicPose> others = {}, double reward = 0.0,
                         SchemeKind scheme = SchemeKind::click_steer) {
  AgentObservation o;
  o.t = 10;
  o.self = make_avatar(0, self, 0);
  o.self.reward = reward;
  o.others = std::move(others);
  o.scheme = ControlScheme::of(scheme);
  return o;
}

StrategyParams stopping() {
  StrategyParams p;
  p.exploit_slow = false;
  return p;
}

// Destination of a fresh agent's first choice.
template <typename Decide>
std::vector<Point> first_choices(Decide&& decide, std::size_t n, std::uint64_t seed) {
  std::vector<Point> out;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Navigator nav;
    const Decision d = decide(rng, nav);
    out.push_back(*d.destination);
  }
  return out;
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double worst = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    worst = std::max(worst, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return worst;
}

std::vector<double> xs(const std::vector<Point>& v) {
  std::vector<double> o;
  for (auto p : v) o.push_back(p.x);
  return o;
}
std::vector<double> ys(const std::vector<Point>& v) {
  std::vector<double> o;
  for (auto p : v) o.push_back(p.y);
  return o;
}

// Critical value at alpha = 0.001 for equal samples of n: 1.95 * sqrt(2/n).
double ks_limit(std::size_t n) { return 1.95 * std::sqrt(2.0 / n); }

}  // namespace

TEST_CASE("asocial: stop on reward, keep a pending destination, redraw on arrival") {
  Rng rng(1);
  Navigator nav;
  const auto p = stopping();
  const auto d = asocial_decide(observe({100, 100}, {}, 1.0), p, rng, nav);
  CHECK(d.stop);
  CHECK(d.intent == Intent::exploit);

  Navigator fresh;
  auto obs = observe({100, 100});
  const auto first = asocial_decide(obs, p, rng, fresh);
  REQUIRE(first.destination);
  CHECK(Arena{}.contains(*first.destination));
  obs.self.destination = first.destination;
  CHECK(*asocial_decide(obs, p, rng, fresh).destination == *first.destination);
  obs.self.destination.reset();  // the engine cleared it on arrival
  CHECK(*asocial_decide(obs, p, rng, fresh).destination != *first.destination);
}

TEST_CASE("slow exploiting holds the heading at slow speed") {
  Rng rng(1);
  Navigator nav;
  auto obs = observe({100, 100}, {}, 1.0);
  obs.self.destination = Point{300, 100};
  const auto d = asocial_decide(obs, StrategyParams{}, rng, nav);
  CHECK_FALSE(d.stop);
  CHECK_FALSE(d.accelerate);
  CHECK(d.intent == Intent::exploit);
  CHECK(*d.destination == Point{300, 100});
  // Turn-keys always exploits by spinning.
  auto tk = observe({100, 100}, {}, 1.0, SchemeKind::turn_keys);
  CHECK(asocial_decide(tk, StrategyParams{}, rng, nav).stop);
}

TEST_CASE("graded fields exploit above the graded threshold") {
  Rng rng(1);
  Navigator nav;
  auto obs = observe({100, 100}, {}, 0.4);
  obs.graded_field = true;
  CHECK(asocial_decide(obs, stopping(), rng, nav).intent == Intent::explore);
  obs.self.reward = 0.6;
  CHECK(asocial_decide(obs, stopping(), rng, nav).intent == Intent::exploit);
}

TEST_CASE("asocial ignores others: permuted or moved poses change nothing") {
  const std::vector<PublicPose> a{{1, {10, 10}, 0, 17}, {2, {300, 200}, 90, 0}};
  const std::vector<PublicPose> b{{2, {50, 60}, 45, 57}, {1, {400, 20}, 10, 0}, {7, {1, 1}, 0, 0}};
  Rng r1(44), r2(44);
  Navigator n1, n2;
  for (int t = 0; t < 200; ++t) {
    auto o1 = observe({200, 100}, a), o2 = observe({200, 100}, b);
    o1.t = o2.t = t;
    const auto d1 = asocial_decide(o1, StrategyParams{}, r1, n1);
    const auto d2 = asocial_decide(o2, StrategyParams{}, r2, n2);
    REQUIRE(d1.destination == d2.destination);
  }
}

TEST_CASE("move-to-center with beta 1 and no exploration heads for the centroid") {
  StrategyParams p;
  p.beta = 1.0;
  p.theta_exp = 0.0;
  Rng rng(3);
  Navigator nav;
  const auto d = centroid_decide(observe({10, 10}, {{1, {100, 100}, 0, 17}, {2, {200, 200}, 0, 17}}), p, rng, nav);
  CHECK(*d.destination == Point{150, 150});
  // No others: behaves as asocial.
  Navigator alone;
  CHECK(Arena{}.contains(*centroid_decide(observe({10, 10}), p, rng, alone).destination));
}

TEST_CASE("move-to-center collapses to asocial at theta 1 or beta 0") {
  const std::vector<PublicPose> others{{1, {100, 100}, 0, 17}, {2, {120, 90}, 0, 17}};
  const std::size_t n = 10000;
  const auto ref = first_choices(
      [&](Rng& r, Navigator& nav) { return asocial_decide(observe({240, 140}, others), StrategyParams{}, r, nav); },
      n, 1);
  for (auto [theta, beta] : {std::pair{1.0, 1.0}, std::pair{0.0, 0.0}}) {
    CAPTURE(theta);
    StrategyParams p;
    p.theta_exp = theta;
    p.beta = beta;
    const auto got = first_choices(
        [&](Rng& r, Navigator& nav) { return centroid_decide(observe({240, 140}, others), p, r, nav); }, n, 2);
    CHECK(ks(xs(ref), xs(got)) < ks_limit(n));
    CHECK(ks(ys(ref), ys(got)) < ks_limit(n));
  }
  // A real bias is detected by the same test.
  StrategyParams biased;
  biased.theta_exp = 0.0;
  biased.beta = 0.5;
  const auto pulled = first_choices(
      [&](Rng& r, Navigator& nav) { return centroid_decide(observe({240, 140}, others), biased, r, nav); }, n, 2);
  CHECK(ks(xs(ref), xs(pulled)) > ks_limit(n));
}

TEST_CASE("naive copy collapses to asocial at theta 1") {
  const std::vector<PublicPose> others{{1, {100, 100}, 0, 17}};
  StrategyParams p;
  p.theta_exp = 1.0;
  const std::size_t n = 10000;
  const auto ref = first_choices(
      [&](Rng& r, Navigator& nav) { return asocial_decide(observe({240, 140}, others), p, r, nav); }, n, 5);
  const auto got = first_choices(
      [&](Rng& r, Navigator& nav) { return naive_copy_decide(observe({240, 140}, others), p, r, nav); }, n, 6);
  CHECK(ks(xs(ref), xs(got)) < ks_limit(n));
  CHECK(ks(ys(ref), ys(got)) < ks_limit(n));
}

TEST_CASE("naive copy: alone it explores, with one other at theta 0 it copies that one") {
  StrategyParams p;
  p.theta_exp = 0.0;
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    Navigator nav;
    CHECK(naive_copy_decide(observe({240, 140}), p, rng, nav).intent == Intent::explore);
    Navigator nav2;
    const auto d = naive_copy_decide(observe({240, 140}, {{4, {30, 40}, 0, 17}}), p, rng, nav2);
    CHECK(d.intent == Intent::copy);
    CHECK(d.target == 4);
    CHECK(*d.destination == Point{30, 40});
  }
}

TEST_CASE("naive copy splits social choices evenly over three others") {
  const std::vector<PublicPose> others{{1, {10, 10}, 0, 17}, {2, {200, 10}, 0, 17}, {3, {10, 200}, 0, 17}};
  StrategyParams p;
  p.theta_exp = 0.1;
  Rng rng(12);
  std::array<int, 4> counts{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    Navigator nav;
    const auto d = naive_copy_decide(observe({240, 140}, others), p, rng, nav);
    ++counts[d.intent == Intent::copy ? d.target : 0];
  }
  // (1 - 0.1) / 3 = 0.30; binomial sd is 0.0046, allow four.
  for (int id = 1; id <= 3; ++id) CHECK(std::abs(counts[id] / double(n) - 0.30) < 4 * 0.0046);
  CHECK(std::abs(counts[0] / double(n) - 0.10) < 4 * 0.003);
}

TEST_CASE("social inference: noiseless exploit and the 1 - epsilon stop rate") {
  BeliefState beliefs;
  beliefs.observe(std::vector<PublicPose>{});
  StrategyParams p = stopping();
  p.epsilon = 0.0;
  Rng rng(2);
  Navigator nav;
  CHECK(social_inference_decide(observe({100, 100}, {}, 1.0), beliefs, p, rng, nav).stop);

  p.epsilon = 0.15;
  int stops = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    Navigator fresh;
    stops += social_inference_decide(observe({100, 100}, {}, 1.0), beliefs, p, rng, fresh).stop;
  }
  CHECK(std::abs(stops / double(n) - 0.85) < 4 * std::sqrt(0.85 * 0.15 / n));
}

TEST_CASE("social inference copies a confidently exploiting agent") {
  const std::vector<PublicPose> others{{5, {300, 200}, 0, 0.0}};
  BeliefState beliefs;
  for (int i = 0; i < 10; ++i) beliefs.observe(others);
  REQUIRE(beliefs.posterior(5) > 0.9);
  Rng rng(4);
  Navigator nav;
  const auto d = social_inference_decide(observe({50, 50}, others), beliefs, StrategyParams{}, rng, nav);
  CHECK(d.intent == Intent::copy);
  CHECK(d.target == 5);
  CHECK(*d.destination == Point{300, 200});
  CHECK(d.accelerate);
}

TEST_CASE("property: social inference never copies below threshold") {
  Rng world(77);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<PublicPose> others;
    const int n = 1 + static_cast<int>(world.below(5));
    for (int i = 0; i < n; ++i)
      others.push_back({i + 1, {world.uniform(0, 480), world.uniform(0, 285)}, 0,
                        world.bernoulli(0.4) ? 0.0 : kSlowSpeed});
    BeliefState beliefs;
    const int ticks = static_cast<int>(world.below(12));
    for (int t = 0; t < ticks; ++t) beliefs.observe(others);
    StrategyParams p;
    p.copy_threshold = world.uniform(0.2, 0.95);
    Rng rng(trial);
    Navigator nav;
    const auto d = social_inference_decide(observe({240, 140}, others), beliefs, p, rng, nav);
    if (d.intent == Intent::copy) {
      REQUIRE(beliefs.posterior(d.target) >= p.copy_threshold);
      const auto it = std::find_if(others.begin(), others.end(), [&](auto& o) { return o.id == d.target; });
      REQUIRE(it != others.end());
      // Goals sit on the 1/1000 px log grid.
      REQUIRE(std::abs(d.destination->x - it->pos.x) <= 0.0005 + 1e-9);
      REQUIRE(std::abs(d.destination->y - it->pos.y) <= 0.0005 + 1e-9);
    }
  }
}

TEST_CASE("social inference returns to the lost spot before anything else") {
  const std::vector<PublicPose> others{{5, {300, 200}, 0, 0.0}};
  BeliefState beliefs;
  for (int i = 0; i < 10; ++i) beliefs.observe(others);
  Rng rng(4);
  Navigator nav;
  StrategyParams p;
  p.epsilon = 0.0;
  social_inference_decide(observe({100, 100}, others, 1.0), beliefs, p, rng, nav);
  const auto d = social_inference_decide(observe({104, 100}, others, 0.0), beliefs, p, rng, nav);
  CHECK(d.intent == Intent::explore);
  CHECK(*d.destination == Point{100, 100});
  CHECK(d.accelerate);
}

TEST_CASE("scripted bots") {
  Rng rng(6);
  const std::vector<int> wall_peers{2}, center_peers{4};
  SUBCASE("wall bot stops on reward") {
    Navigator nav;
    CHECK(scripted_bot_decide(observe({12, 12}, {}, 1.0), BotClass::wall, wall_peers, rng, nav).stop);
  }
  SUBCASE("center bot copies a stopped center peer") {
    Navigator nav;
    const auto d = scripted_bot_decide(observe({200, 150}, {{4, {250, 120}, 0, 0.0}, {2, {12, 12}, 0, 0.0}}),
                                       BotClass::center, center_peers, rng, nav);
    CHECK(d.intent == Intent::copy);
    CHECK(d.target == 4);
    CHECK(*d.destination == Point{250, 120});
  }
  SUBCASE("wall bot ignores a stopped center bot and keeps patrolling") {
    Navigator nav;
    const auto d = scripted_bot_decide(observe({12, 100}, {{4, {250, 120}, 0, 0.0}}), BotClass::wall, wall_peers,
                                       rng, nav);
    CHECK(d.intent == Intent::explore);
    const Point c = *d.destination;
    const bool corner = (c.x == kWallPatrolInset || c.x == 480 - kWallPatrolInset) &&
                        (c.y == kWallPatrolInset || c.y == 285 - kWallPatrolInset);
    CHECK(corner);
  }
  SUBCASE("center bots roam the interior") {
    Navigator nav;
    const Rect r = center_region(Arena{});
    for (int i = 0; i < 50; ++i) {
      auto obs = observe({240, 140});
      const auto d = scripted_bot_decide(obs, BotClass::center, center_peers, rng, nav);
      CHECK(r.contains(*d.destination));
      nav.goal.reset();
    }
  }
}

TEST_CASE("strategy names, params validation and serialisation") {
  for (auto k : {StrategyKind::asocial, StrategyKind::centroid, StrategyKind::naive_copy,
                 StrategyKind::social_inference, StrategyKind::bot_wall, StrategyKind::bot_center,
                 StrategyKind::idle}) {
    CHECK(strategy_from_string(to_string(k)) == k);
    StrategyContext ctx;
    ctx.peers = {1};
    CHECK(make_strategy(k, {}, ctx)->kind() == k);
  }
  CHECK(to_string(StrategyKind::centroid) == "move-to-center");
  CHECK_THROWS(strategy_from_string("centroid"));
  StrategyParams p;
  p.theta_exp = 1.2;
  CHECK_THROWS(p.validate());
  p = {};
  p.beta = -0.1;
  CHECK_THROWS(p.validate());
  p = {};
  p.theta_exp = 0.3;
  p.beta = 0.75;
  p.reacquire = false;
  nlohmann::json j = p;
  CHECK(j.get<StrategyParams>() == p);
  CHECK(nlohmann::json::object().get<StrategyParams>() == StrategyParams{});
}

TEST_CASE("destination draws respect the margin") {
  Rng rng(10);
  const Arena a;
  for (int i = 0; i < 5000; ++i) {
    const Point u = uniform_destination(rng, a, 10);
    REQUIRE(u.x >= 10);
    REQUIRE(u.x <= 470);
    REQUIRE(u.y >= 10);
    REQUIRE(u.y <= 275);
    const Point l = local_destination(rng, a, {5, 5}, 60, 10);
    REQUIRE(l.x >= 10);
    REQUIRE(l.y >= 10);
    REQUIRE(distance(l, {5, 5}) <= 60 + 10 * std::sqrt(2.0));
  }
}
