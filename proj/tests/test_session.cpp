#include <doctest.h>

#include <nlohmann/json.hpp>

#include "csense/session.hpp"

using namespace csense;

namespace {

SessionConfig small(StrategyKind kind, std::size_t n, std::uint64_t seed, std::size_t ticks = 240) {
  SessionConfig c;
  c.duration = ticks;
  c.field = standard_field(FieldKind::spotlight, 1, ticks);
  c.seats = homogeneous_seats(kind, {}, n);
  c.seed = seed;
  return c;
}

class BadStrategy final : public Strategy {
 public:
  Decision decide(const AgentObservation&, Rng&) override {
    Decision d;
    d.destination = Point{900, 900};
    return d;
  }
  StrategyKind kind() const override { return StrategyKind::asocial; }
};

}  // namespace

TEST_CASE("same configuration and seed give byte-identical logs") {
  for (auto kind : {StrategyKind::asocial, StrategyKind::centroid, StrategyKind::social_inference}) {
    const auto c = small(kind, 4, 21);
    CHECK(run_session(c).to_jsonl() == run_session(c).to_jsonl());
    auto other = c;
    other.seed = 22;
    CHECK(run_session(c).to_jsonl() != run_session(other).to_jsonl());
  }
}

TEST_CASE("log layout: header, one line per tick, joins at tick 0") {
  const auto c = small(StrategyKind::asocial, 3, 4, 50);
  const auto log = run_session(c);
  REQUIRE(log.ticks.size() == 50);
  CHECK(log.header.seed == 4);
  CHECK(log.header.config.at("duration") == 50);
  int joins = 0;
  for (const auto& e : log.ticks[0].events) joins += e.kind == EventKind::join;
  CHECK(joins == 3);
  for (std::size_t t = 0; t < 50; ++t) {
    CHECK(log.ticks[t].t == t);
    CHECK(log.ticks[t].agents.size() == 3);
    CHECK(log.ticks[t].field.size() == 1);
  }
  const auto text = log.to_jsonl();
  CHECK(std::count(text.begin(), text.end(), '\n') == 51);
}

TEST_CASE("parsed logs equal the in-memory log") {
  auto c = small(StrategyKind::social_inference, 3, 8, 120);
  c.log_beliefs = true;
  const auto log = run_session(c);
  const auto back = ReplayLog::from_jsonl(log.to_jsonl());
  CHECK(back.ticks == log.ticks);
  CHECK(back.header.config == log.header.config);
  CHECK(back.to_jsonl() == log.to_jsonl());
  bool beliefs = false;
  for (const auto& t : log.ticks)
    for (const auto& e : t.events) beliefs |= e.kind == EventKind::belief;
  CHECK(beliefs);
}

TEST_CASE("configuration JSON round trip") {
  auto c = small(StrategyKind::naive_copy, 2, 99, 80);
  c.scheme = ControlScheme::turn_keys();
  c.seats[1].ghost = true;
  c.seats[0].params.theta_exp = 0.3;
  c.field = standard_field(FieldKind::noisy_blend, 2, 80, 0.25);
  const nlohmann::json j = c;
  const auto back = j.get<SessionConfig>();
  CHECK(nlohmann::json(back) == j);
  CHECK(back.seats == c.seats);
  CHECK(back.group_size() == 1);
}

TEST_CASE("replaying the recorded inputs regenerates the log") {
  for (auto scheme : {ControlScheme::click_steer(), ControlScheme::turn_keys()}) {
    auto c = small(StrategyKind::social_inference, 4, 5, 300);
    c.scheme = scheme;
    const auto log = run_session(c);
    const auto field = std::make_shared<ScoreField>(ScoreField::build(c.field, c.arena));
    CHECK(replay_inputs(log, field).to_jsonl() == log.to_jsonl());
  }
}

TEST_CASE("removed seats leave the log after a drop event") {
  const auto c = small(StrategyKind::asocial, 3, 6, 40);
  auto field = std::make_shared<ScoreField>(ScoreField::build(c.field, c.arena));
  LogSink sink;
  SessionRunner runner(c, field, build_strategies(c), &sink);
  runner.start();
  for (int i = 0; i < 10; ++i) runner.tick();
  runner.remove_seat(1, "hidden");
  runner.remove_seat(1, "hidden");  // second removal is a no-op
  while (!runner.finished()) runner.tick();
  const auto& log = sink.log();
  CHECK(log.ticks[9].agents.size() == 3);
  REQUIRE(log.ticks[10].events.size() == 1);
  CHECK(log.ticks[10].events[0] == Event::drop(1, "hidden"));
  CHECK(log.ticks[10].agents.size() == 2);
  CHECK(log.ticks[10].agent(1) == nullptr);
  CHECK(runner.world().active_visible() == 2);
  CHECK(replay_inputs(log, field).to_jsonl() == log.to_jsonl());
}

TEST_CASE("ghosts are simulated but unseen by visible seats") {
  auto c = small(StrategyKind::asocial, 3, 2, 20);
  c.seats[2].ghost = true;
  auto field = std::make_shared<ScoreField>(ScoreField::build(c.field, c.arena));
  SessionRunner runner(c, field, build_strategies(c), nullptr);
  runner.tick();
  AgentObservation o;
  runner.world().observe(0, o);
  REQUIRE(o.others.size() == 1);
  CHECK(o.others[0].id == 1);
  runner.world().observe(2, o);
  CHECK(o.others.empty());
  const auto log = run_session(c);
  CHECK(log.ticks[0].agents.size() == 2);
  REQUIRE(log.ticks[0].ghosts.size() == 1);
  CHECK(log.ticks[0].ghosts[0].id == 2);
}

TEST_CASE("external inputs: applied at the start of a tick, illegal ones rejected") {
  auto c = small(StrategyKind::asocial, 2, 3, 10);
  auto strategies = build_strategies(c);
  strategies[0].reset();  // human seat
  auto field = std::make_shared<ScoreField>(ScoreField::build(c.field, c.arena));
  LogSink sink;
  SessionRunner runner(c, field, std::move(strategies), &sink);
  runner.start({std::vector<std::string>{"human", "agent"}});
  const std::vector<ExternalInput> in{{0, Input::click({300.1234, 200})}, {0, Input::press(Key::left)}, {7, Input::press(Key::a)}};
  CHECK(runner.tick(in) == 2);
  const auto& rec = sink.log().ticks[0];
  bool clicked = false;
  for (const auto& e : rec.events) clicked |= e == Event::click(0, {300.123, 200});
  CHECK(clicked);
  CHECK(rec.events[0] == Event::join(0, "human"));
  CHECK(runner.world().avatar(0).destination == Point{300.123, 200});
}

TEST_CASE("a strategy emitting an illegal input aborts the session") {
  auto c = small(StrategyKind::asocial, 1, 3, 10);
  auto field = std::make_shared<ScoreField>(ScoreField::build(c.field, c.arena));
  std::vector<std::unique_ptr<Strategy>> s;
  s.push_back(std::make_unique<BadStrategy>());
  SessionRunner runner(c, field, std::move(s), nullptr);
  CHECK_THROWS_AS(runner.tick(), SessionAborted);
}

TEST_CASE("configuration validation") {
  auto c = small(StrategyKind::asocial, 2, 1);
  CHECK_NOTHROW(c.validate());
  c.duration = 0;
  CHECK_THROWS(c.validate());
  c = small(StrategyKind::asocial, 0, 1);
  CHECK_THROWS(c.validate());
  c = small(StrategyKind::asocial, kMaxGroupSize + 1, 1);
  CHECK_THROWS(c.validate());
  c = small(StrategyKind::asocial, 2, 1, 300);
  c.field.duration = 100;  // shorter than the session
  CHECK_THROWS(c.validate());
}

TEST_CASE("property: every recorded value sits on the milli grid") {
  const auto log = run_session(small(StrategyKind::social_inference, 5, 17, 200));
  for (const auto& t : log.ticks)
    for (const auto& a : t.agents) {
      REQUIRE(a.x == quantize_milli(a.x));
      REQUIRE(a.y == quantize_milli(a.y));
      REQUIRE(a.score == quantize_milli(a.score));
      REQUIRE(Arena{}.contains({a.x, a.y}));
    }
}
