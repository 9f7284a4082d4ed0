#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "csense/simharness.hpp"

using namespace csense;

namespace {

SweepSpec tiny(StrategyKind model) {
  SweepSpec s;
  s.model = model;
  s.sizes = {1, 3};
  s.theta = {0.2, 0.8};
  s.beta = {0.5};
  s.replicates = 2;
  s.fields = {0, 1};
  s.duration = 160;
  s.window = Window{80, 160};
  s.resamples = 200;
  s.seed = 11;
  return s;
}

}  // namespace

TEST_CASE("sweep results do not depend on the thread count") {
  auto s = tiny(StrategyKind::centroid);
  s.threads = 1;
  const auto one = run_sweep(s);
  s.threads = 4;
  const auto four = run_sweep(s);
  CHECK(rows_to_tsv(one.rows) == rows_to_tsv(four.rows));
  CHECK(cells_to_tsv(one.cells) == cells_to_tsv(four.cells));
}

TEST_CASE("sweep grid: cells, rows and the parameters each model uses") {
  const auto r = run_sweep(tiny(StrategyKind::centroid));
  CHECK(r.cells.size() == 2 * 2 * 1);
  CHECK(r.rows.size() == r.cells.size() * 2 * 2);
  const auto* c = r.cell(3, 0.8, 0.5);
  REQUIRE(c);
  CHECK(c->n == 4);
  CHECK(r.values(*c).size() == 4);
  for (const auto& row : r.rows) {
    CHECK(row.theta);
    CHECK(row.beta);
    CHECK_FALSE(row.epsilon);
    CHECK(row.mean_second_half >= 0.0);
    CHECK(row.mean_second_half <= 1.0);
  }

  const auto asocial = run_sweep(tiny(StrategyKind::asocial));
  CHECK(asocial.cells.size() == 2);  // theta and beta do not apply
  CHECK_FALSE(asocial.rows[0].theta);
  const auto inference = run_sweep(tiny(StrategyKind::social_inference));
  CHECK(inference.rows[0].epsilon == 0.15);
}

TEST_CASE("rows file header and formatting") {
  const auto r = run_sweep(tiny(StrategyKind::naive_copy));
  const auto text = rows_to_tsv(r.rows);
  CHECK(text.rfind("model\tsize\ttheta\tbeta\teps\tfield\treplicate\tmean_second_half\t", 0) == 0);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    CHECK(std::count(line.begin(), line.end(), '\t') == 8);
    CHECK(line.rfind(std::string(to_string(StrategyKind::naive_copy)) + "\t", 0) == 0);
  }
  CHECK(n == r.rows.size());
}

TEST_CASE("seeds: matched across fields kinds, distinct across replicates") {
  auto a = tiny(StrategyKind::social_inference);
  auto b = a;
  b.field_kind = FieldKind::noisy_blend;
  b.noise_weight = 0.25;
  const auto ca = sweep_session(a, 3, std::nullopt, std::nullopt, 1, 0);
  const auto cb = sweep_session(b, 3, std::nullopt, std::nullopt, 1, 0);
  CHECK(ca.seed == cb.seed);
  CHECK(ca.seed != sweep_session(a, 3, std::nullopt, std::nullopt, 1, 1).seed);
  CHECK(ca.seed != sweep_session(a, 3, std::nullopt, std::nullopt, 0, 0).seed);
  CHECK(ca.seed != sweep_session(a, 4, std::nullopt, std::nullopt, 1, 0).seed);
  CHECK_THROWS(sweep_session(tiny(StrategyKind::centroid), 3, 0.55, 0.5, 0, 0));
}

TEST_CASE("the window mean sink averages r over visible agents in the window") {
  SessionConfig c;
  c.duration = 60;
  c.field = standard_field(FieldKind::spotlight, 0, 60);
  c.seats = homogeneous_seats(StrategyKind::asocial, {}, 3);
  c.seats[2].ghost = true;
  c.seed = 3;
  const auto log = run_session(c);
  WindowMeanSink sink({20, 50});
  run_session(c, std::make_shared<ScoreField>(ScoreField::build(c.field)), sink);
  // Oracle from the log.
  double total = 0;
  for (int id : {0, 1}) {
    double s = 0;
    for (std::size_t t = 20; t < 50; ++t) s += log.ticks[t].agent(id)->r;
    total += s / 30;
  }
  CHECK(sink.group_mean() == doctest::Approx(total / 2).epsilon(1e-9));
  CHECK(sink.agent_means().size() == 2);
}

TEST_CASE("exp3: turn-keys on noisy fields, low-noise size 6 excluded from aggregates") {
  Exp3Spec e;
  e.noise_weight = 0.10;
  e.sizes = {1, 6};
  e.replicates = 1;
  e.fields = {0};
  e.duration = 1260;  // the second half starts at 1200
  e.resamples = 100;
  const auto s = e.as_sweep();
  CHECK(s.scheme == SchemeKind::turn_keys);
  CHECK(s.field_kind == FieldKind::noisy_blend);
  CHECK(s.analysis_window() == Window{1200, 1260});
  const auto r = run_exp3(e);
  CHECK(r.rows.size() == 2);
  CHECK(r.cells.size() == 1);
  CHECK(r.cells[0].size == 1);
  e.noise_weight = 0.25;
  CHECK(run_exp3(e).cells.size() == 2);
  e.exclude_low_noise_size6 = false;
  e.noise_weight = 0.10;
  CHECK(run_exp3(e).cells.size() == 2);
}

TEST_CASE("spec JSON round trips and validation") {
  auto s = tiny(StrategyKind::centroid);
  const nlohmann::json j = s;
  const auto back = j.get<SweepSpec>();
  CHECK(nlohmann::json(back) == j);
  s.sizes = {};
  CHECK_THROWS(s.validate());
  s = tiny(StrategyKind::centroid);
  s.replicates = 0;
  CHECK_THROWS(s.validate());
  Exp3Spec e;
  e.noise_weight = 0.0;
  CHECK_THROWS(e.validate());
  const nlohmann::json je = Exp3Spec{};
  CHECK(nlohmann::json(je.get<Exp3Spec>()) == je);
}

TEST_CASE("write_sweep writes rows.tsv, cells.tsv and spec.json") {
  const auto dir = std::filesystem::temp_directory_path() / "csense_sweep_test";
  std::filesystem::remove_all(dir);
  auto s = tiny(StrategyKind::asocial);
  s.output = dir.string();
  s.write_logs = true;
  const auto r = run_sweep(s);
  write_sweep(s, r);
  CHECK(std::filesystem::exists(dir / "rows.tsv"));
  CHECK(std::filesystem::exists(dir / "cells.tsv"));
  CHECK(std::filesystem::exists(dir / "spec.json"));
  std::size_t logs = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "logs")) logs += e.path().extension() == ".jsonl";
  CHECK(logs == r.rows.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("parallel_for runs every job once and propagates failures") {
  std::vector<std::atomic<int>> hits(100);
  std::size_t last = 0;
  parallel_for(100, 3, [&](std::size_t i) { ++hits[i]; }, [&](std::size_t d, std::size_t) { last = d; });
  for (auto& h : hits) CHECK(h == 1);
  CHECK(last == 100);
  CHECK_THROWS_AS(parallel_for(10, 2, [](std::size_t i) {
                    if (i == 5) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}

TEST_CASE("size slope of an asocial sweep is near zero") {
  auto s = tiny(StrategyKind::asocial);
  s.sizes = {1, 2, 3};
  s.replicates = 3;
  const auto r = run_sweep(s);
  const auto slope = size_slope(r, 300, 1);
  CHECK(slope.lo <= slope.hi);
  CHECK(std::abs(slope.estimate) < 0.2);
}
