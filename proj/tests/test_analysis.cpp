#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "csense/analysis.hpp"
#include "csense/session.hpp"

using namespace csense;
using namespace csense::analysis;

namespace {

AgentRecord agent(int id, double x, double y, double speed, double r = 0.0, bool wall = false) {
  AgentRecord a;
  a.id = id;
  a.x = x;
  a.y = y;
  a.speed = speed;
  a.r = r;
  a.wall = wall;
  return a;
}

ReplayLog synthetic(std::size_t seats, std::size_t duration, FieldKind kind = FieldKind::spotlight) {
  SessionConfig c;
  c.duration = duration;
  c.field = standard_field(kind, 0, duration, kind == FieldKind::noisy_blend ? 0.25 : 0.0);
  c.seats = homogeneous_seats(StrategyKind::asocial, {}, seats);
  ReplayLog log;
  log.header.config = c;
  return log;
}

}  // namespace

TEST_CASE("header helpers") {
  auto log = synthetic(3, 100);
  CHECK(group_size(log) == 3);
  CHECK(session_duration(log) == 100);
  CHECK(condition_of(log) == "spotlight");
  CHECK(condition_of(synthetic(1, 10, FieldKind::noisy_blend)) == "noisy-blend:0.25");
  log.header.config["scenario"] = nlohmann::json::object();
  CHECK(condition_of(log) == "scenario");
  CHECK(parse_window("1200:2400") == Window{1200, 2400});
  CHECK_THROWS_AS(parse_window("1200"), AnalysisError);
  CHECK_THROWS_AS(parse_window("a:b"), AnalysisError);
}

TEST_CASE("mean performance: per-agent window means, wall ticks count as zero") {
  auto log = synthetic(2, 4);
  for (std::size_t t = 0; t < 4; ++t) {
    TickRecord r;
    r.t = t;
    r.agents = {agent(0, 10, 10, 17, t < 2 ? 1.0 : 0.0), agent(1, 20, 20, 17, 1.0, t == 3)};
    log.ticks.push_back(r);
  }
  const std::vector<ReplayLog> logs{log};
  const auto groups = as_groups(logs);
  const auto rep = mean_performance(groups, Window{0, 4}, 100);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].mean_r == doctest::Approx(0.5));
  CHECK(rep.rows[1].mean_r == doctest::Approx(0.75));
  REQUIRE(rep.sizes.size() == 1);
  CHECK(rep.sizes[0].ci.estimate == doctest::Approx(0.625));
  // Default window is the second half, which this short log does not reach.
  CHECK_THROWS_AS(mean_performance(groups), AnalysisError);
  CHECK(performance_tsv(rep).rfind("group\tsize\tcondition\tagent\twindow_begin\twindow_end\tmean_r\n", 0) == 0);
}

TEST_CASE("performance bootstrap resamples groups") {
  std::vector<ReplayLog> logs;
  for (int g = 0; g < 10; ++g) {
    auto log = synthetic(1, 2);
    for (std::size_t t = 0; t < 2; ++t) {
      TickRecord r;
      r.t = t;
      r.agents = {agent(0, 1, 1, 17, g * 0.1)};
      log.ticks.push_back(r);
    }
    logs.push_back(log);
  }
  const auto rep = mean_performance(as_groups(logs), Window{0, 2}, 2000, 3);
  const auto& ci = rep.sizes.at(0).ci;
  CHECK(rep.sizes[0].groups == 10);
  CHECK(ci.estimate == doctest::Approx(0.45));
  CHECK(ci.lo < 0.45);
  CHECK(ci.hi > 0.45);
  CHECK(ci.lo > 0.2);
  CHECK(ci.hi < 0.7);
}

TEST_CASE("speed by reward: displacement per tick, wall excluded, never-rewarded counted") {
  auto log = synthetic(2, 6);
  for (std::size_t t = 0; t < 6; ++t) {
    TickRecord r;
    r.t = t;
    const bool rewarded = t % 2 == 0;
    r.agents = {agent(0, 10, 10, rewarded ? kSlowSpeed : kFastSpeed, rewarded ? 1.0 : 0.0, t == 5),
                agent(1, 50, 50, kFastSpeed)};
    log.ticks.push_back(r);
  }
  const std::vector<ReplayLog> logs{log};
  const auto rep = speed_by_reward(as_groups(logs), std::nullopt, 100);
  CHECK(rep.paired == 1);
  CHECK(rep.never_rewarded == 1);
  CHECK(rep.wall_ticks_excluded == 1);
  REQUIRE(rep.ratio);
  CHECK(rep.rewarded_mean == doctest::Approx(kSlowStep));
  CHECK(rep.unrewarded_mean == doctest::Approx(kFastStep));
  CHECK(*rep.ratio == doctest::Approx(kSlowSpeed / kFastSpeed));
  CHECK(speed_tsv(rep).find("ratio=0.298246") != std::string::npos);
}

TEST_CASE("click proximity: distances to stopped and moving agents as they stood") {
  auto log = synthetic(3, 3);
  TickRecord t0;
  t0.t = 0;
  t0.agents = {agent(0, 100, 100, 17), agent(1, 130, 140, 0), agent(2, 200, 100, 57)};
  TickRecord t1 = t0;
  t1.t = 1;
  t1.agents[1] = agent(1, 300, 280, 17);  // moved after the click
  t1.events = {Event::click(0, {130, 140})};
  log.ticks = {t0, t1};
  const std::vector<ReplayLog> logs{log};
  const auto rep = click_proximity(as_groups(logs));
  REQUIRE(rep.rows.size() == 1);
  const auto& row = rep.rows[0];
  CHECK(row.social);
  CHECK(row.condition == "baseline");
  CHECK(*row.d_exploiting == 0.0);
  CHECK(*row.d_other == doctest::Approx(std::hypot(70, 40)));
  CHECK_FALSE(row.ghosts);
}

TEST_CASE("click proximity: scripted clicks ignored, ghosts measured, conditions tracked") {
  SessionConfig c;
  c.duration = 4;
  c.field.kind = FieldKind::zero;
  c.field.duration = 4;
  c.seats = {{StrategyKind::social_inference, {}, {}, false}, {StrategyKind::bot_wall, {}, {}, true}};
  ReplayLog log;
  log.header.config = c;
  log.header.config["scenario"] = {{"script", {{"social", false}}}};
  for (std::size_t t = 0; t < 4; ++t) {
    TickRecord r;
    r.t = t;
    r.agents = {agent(0, 100, 100, 17)};
    r.ghosts = {agent(1, 0, 100, 0)};
    log.ticks.push_back(r);
  }
  log.ticks[1].events = {Event::intervention("distant", "on"), Event::click(0, {10, 100}), Event::click(1, {5, 5})};
  log.ticks[2].events = {Event::intervention("distant", "off")};
  log.ticks[3].events = {Event::click(0, {0, 110})};
  const std::vector<ReplayLog> logs{log};
  const auto rep = click_proximity(as_groups(logs));
  REQUIRE(rep.rows.size() == 2);
  CHECK_FALSE(rep.rows[0].social);
  CHECK(rep.rows[0].ghosts);
  CHECK(rep.rows[0].condition == "distant");
  CHECK(*rep.rows[0].d_exploiting == doctest::Approx(10));
  CHECK_FALSE(rep.rows[0].d_other);
  CHECK(rep.rows[1].condition == "baseline");
  // Unpaired clicks are listed but not summarised.
  const auto sum = summarize_proximity(rep, 100);
  for (const auto& s : sum) CHECK(s.n_exploiting == 0);
}

TEST_CASE("proximity summary: paired medians and the gap") {
  std::vector<ReplayLog> logs;
  for (int g = 0; g < 6; ++g) {
    auto log = synthetic(3, 2);
    TickRecord t0;
    t0.t = 0;
    t0.agents = {agent(0, 100, 100, 17), agent(1, 110, 100, 0), agent(2, 100 - 50 - g, 100, 17)};
    TickRecord t1 = t0;
    t1.t = 1;
    t1.events = {Event::click(0, {100, 100})};
    log.ticks = {t0, t1};
    logs.push_back(log);
  }
  const auto sum = summarize_proximity(click_proximity(as_groups(logs)), 500);
  REQUIRE(sum.size() == 1);
  CHECK(sum[0].clicks == 6);
  CHECK(sum[0].n_exploiting == 6);
  CHECK(sum[0].d_exploiting.estimate == doctest::Approx(10));
  CHECK(sum[0].d_other.estimate == doctest::Approx(52.5));
  CHECK(sum[0].gap.estimate == doctest::Approx(42.5));
  CHECK(sum[0].gap.lo > 0);
  const auto plot = plot_proximity(sum);
  REQUIRE(plot.size() == 2);
  CHECK(plot[0].series == "social:baseline");
}

TEST_CASE("state metrics: bins by own reward, copy target reward") {
  auto log = synthetic(2, 3);
  for (std::size_t t = 0; t < 3; ++t) {
    TickRecord r;
    r.t = t;
    r.agents = {agent(0, 1, 1, 17, 0.05 + 0.45 * t), agent(1, 2, 2, 0, 0.8)};
    log.ticks.push_back(r);
  }
  std::vector<std::vector<LabelRecord>> labels{{{0, 0, {State::exploring, -1}},
                                                {1, 0, {State::copying, 1}},
                                                {2, 0, {State::exploiting, -1}},
                                                {2, 1, {State::exploiting, -1}}}};
  const std::vector<ReplayLog> logs{log};
  const auto rep = state_metrics(as_groups(logs), labels, 10, 100);
  REQUIRE(rep.bins.size() == 4);
  CHECK(rep.bins[0].bin == 0);
  CHECK(rep.bins[0].p_exploring == 1.0);
  CHECK(rep.bins[1].bin == 5);
  CHECK(rep.bins[1].p_copying == 1.0);
  CHECK(rep.bins[2].bin == 8);  // agent 1 at r = 0.8
  CHECK(rep.bins[3].bin == 9);
  CHECK(rep.bins[3].p_exploiting == 1.0);
  REQUIRE(rep.copy_targets.size() == 1);
  CHECK(rep.copy_targets[0].n == 1);
  CHECK(rep.copy_targets[0].mean_target_r == doctest::Approx(0.8));
  std::vector<std::vector<LabelRecord>> bad{{{7, 0, {}}}};
  CHECK_THROWS_AS(state_metrics(as_groups(logs), bad), AnalysisError);
  CHECK_THROWS_AS(state_metrics(as_groups(logs), labels, 0), AnalysisError);
  CHECK(states_tsv(rep).rfind("condition\tbin\tlo\thi\tn\tp_exploring\tp_exploiting\tp_copying\n", 0) == 0);
}

TEST_CASE("state proportions sum to one in every bin of a real run") {
  SessionConfig c;
  c.duration = 300;
  c.field = standard_field(FieldKind::noisy_blend, 1, 300, 0.25);
  c.scheme = ControlScheme::turn_keys();
  c.seats = homogeneous_seats(StrategyKind::social_inference, {}, 4);
  c.seed = 2;
  const std::vector<ReplayLog> logs{run_session(c)};
  const auto rep = state_metrics(as_groups(logs), {}, 20, 100);
  std::size_t n = 0;
  for (const auto& b : rep.bins) {
    CHECK(b.p_exploring + b.p_exploiting + b.p_copying == doctest::Approx(1.0));
    n += b.n;
  }
  CHECK(n == 300 * 4);
}

TEST_CASE("plot output columns") {
  const std::vector<PlotPoint> p{{"a", "1", 0.5, 0.25, 0.75}};
  CHECK(plot_tsv(p) == "series\tx\ty\tci_lo\tci_hi\na\t1\t0.500000\t0.250000\t0.750000\n");
}

TEST_CASE("path expansion: literal files, directories and globs") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "csense_expand_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const char* n : {"b.jsonl", "a.jsonl", "a.practice-1.jsonl", "c.txt"}) std::ofstream(dir / n) << "x";
  const std::vector<std::string> d{dir.string()};
  const auto all = expand_paths(d);
  REQUIRE(all.size() == 3);
  CHECK(fs::path(all[0]).filename() == "a.jsonl");
  const std::vector<std::string> g{(dir / "a*.jsonl").string()};
  CHECK(expand_paths(g).size() == 2);
  const std::vector<std::string> q{(dir / "?.jsonl").string()};
  CHECK(expand_paths(q).size() == 2);
  const std::vector<std::string> lit{(dir / "c.txt").string()};
  CHECK(expand_paths(lit) == lit);
  fs::remove_all(dir);
}
