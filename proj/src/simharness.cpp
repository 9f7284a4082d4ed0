#include "csense/simharness.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <thread>

namespace csense {

namespace {

constexpr std::uint64_t kBootstrapStream = 0xb007;

class TeeSink final : public TickSink {
 public:
  TeeSink(TickSink& a, TickSink& b) : a_(a), b_(b) {}
  void on_start(const LogHeader& h) override {
    a_.on_start(h);
    b_.on_start(h);
  }
  void on_tick(const World& w, std::span<const Event> e) override {
    a_.on_tick(w, e);
    b_.on_tick(w, e);
  }
  void on_end(const World& w) override {
    a_.on_end(w);
    b_.on_end(w);
  }

 private:
  TickSink& a_;
  TickSink& b_;
};

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:g}", *v) : "NA"; }

void check_grid(const std::vector<double>& g, const char* name) {
  if (g.empty()) throw std::invalid_argument(fmt::format("{} grid must not be empty", name));
  for (double v : g)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(fmt::format("{} values must lie in [0,1]", name));
}

bool same(const std::optional<double>& a, const std::optional<double>& b) {
  if (!a || !b) return true;
  return std::abs(*a - *b) < 1e-9;
}

struct Cell {
  std::size_t size;
  std::size_t ti;
  std::size_t bi;
  std::optional<double> theta;
  std::optional<double> beta;
};

std::vector<Cell> enumerate_cells(const SweepSpec& spec) {
  const std::size_t nt = spec.uses_theta() ? spec.theta.size() : 1;
  const std::size_t nb = spec.uses_beta() ? spec.beta.size() : 1;
  std::vector<Cell> cells;
  for (std::size_t size : spec.sizes)
    for (std::size_t ti = 0; ti < nt; ++ti)
      for (std::size_t bi = 0; bi < nb; ++bi)
        cells.push_back({size, ti, bi, spec.uses_theta() ? std::optional(spec.theta[ti]) : std::nullopt,
                         spec.uses_beta() ? std::optional(spec.beta[bi]) : std::nullopt});
  return cells;
}

std::string log_name(const SweepSpec& spec, const Cell& c, int field, std::size_t rep) {
  return fmt::format("{}_n{}_t{}_b{}_f{}_r{}.jsonl", to_string(spec.model), c.size, c.ti, c.bi, field, rep);
}

}  // namespace

// ---------------------------------------------------------------------------

bool SweepSpec::uses_theta() const {
  return model == StrategyKind::centroid || model == StrategyKind::naive_copy;
}
bool SweepSpec::uses_beta() const { return model == StrategyKind::centroid; }
bool SweepSpec::uses_epsilon() const { return model == StrategyKind::social_inference; }

void SweepSpec::validate() const {
  if (sizes.empty()) throw std::invalid_argument("sizes must not be empty");
  for (auto n : sizes)
    if (n == 0 || n > kMaxGroupSize) throw std::invalid_argument(fmt::format("group size {} out of range", n));
  if (uses_theta()) check_grid(theta, "theta");
  if (uses_beta()) check_grid(beta, "beta");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0,1]");
  if (replicates == 0) throw std::invalid_argument("replicates must be at least 1");
  if (fields.empty()) throw std::invalid_argument("fields must not be empty");
  for (int f : fields)
    if (f < 0) throw std::invalid_argument("field ids must be non-negative");
  if (duration == 0) throw std::invalid_argument("duration must be positive");
  const Window w = analysis_window();
  if (w.length() == 0 || w.end > duration) throw std::invalid_argument("analysis window empty or past the end");
  if (resamples == 0) throw std::invalid_argument("resamples must be at least 1");
  if (write_logs && output.empty()) throw std::invalid_argument("write_logs needs an output directory");
  if (model == StrategyKind::bot_wall || model == StrategyKind::bot_center || model == StrategyKind::idle)
    throw std::invalid_argument("sweeps take one of the four agent models");
  base.validate();
}

void to_json(nlohmann::json& j, const SweepSpec& s) {
  j = nlohmann::json{{"model", to_string(s.model)},
                     {"sizes", s.sizes},
                     {"theta", s.theta},
                     {"beta", s.beta},
                     {"eps", s.epsilon},
                     {"replicates", s.replicates},
                     {"fields", s.fields},
                     {"seed", s.seed},
                     {"output", s.output},
                     {"field_kind", to_string(s.field_kind)},
                     {"noise_weight", s.noise_weight},
                     {"scheme", to_string(s.scheme)},
                     {"duration", s.duration},
                     {"params", s.base},
                     {"threads", s.threads},
                     {"resamples", s.resamples},
                     {"write_logs", s.write_logs}};
  if (s.window) j["window"] = {s.window->begin, s.window->end};
}

void from_json(const nlohmann::json& j, SweepSpec& s) {
  const SweepSpec d;
  s.model = strategy_from_string(j.at("model").get<std::string>());
  s.sizes = j.value("sizes", d.sizes);
  s.theta = j.value("theta", d.theta);
  s.beta = j.value("beta", d.beta);
  s.epsilon = j.value("eps", d.epsilon);
  s.replicates = j.value("replicates", d.replicates);
  s.fields = j.value("fields", d.fields);
  s.seed = j.value("seed", d.seed);
  s.output = j.value("output", d.output);
  s.field_kind = field_kind_from_string(j.value("field_kind", std::string(to_string(d.field_kind))));
  s.noise_weight = j.value("noise_weight", d.noise_weight);
  s.scheme = scheme_from_string(j.value("scheme", std::string(to_string(d.scheme))));
  s.duration = j.value("duration", d.duration);
  s.base = j.contains("params") ? j.at("params").get<StrategyParams>() : d.base;
  s.threads = j.value("threads", d.threads);
  s.resamples = j.value("resamples", d.resamples);
  s.write_logs = j.value("write_logs", d.write_logs);
  s.window.reset();
  if (j.contains("window")) {
    const auto w = j.at("window").get<std::vector<std::size_t>>();
    if (w.size() != 2) throw std::invalid_argument("window must be [begin, end]");
    s.window = Window{w[0], w[1]};
  }
}

// ---------------------------------------------------------------------------

void WindowMeanSink::on_tick(const World& world, std::span<const Event>) {
  const std::size_t t = world.tick() - 1;
  if (sum_.empty()) {
    sum_.assign(world.seats(), 0.0);
    n_.assign(world.seats(), 0);
  }
  if (!window_.contains(t)) return;
  for (std::size_t i = 0; i < world.seats(); ++i) {
    if (!world.active(i) || world.ghost(i)) continue;
    sum_[i] += world.avatar(i).reward;
    ++n_[i];
  }
}

std::vector<double> WindowMeanSink::agent_means() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < sum_.size(); ++i)
    if (n_[i] > 0) out.push_back(sum_[i] / static_cast<double>(n_[i]));
  return out;
}

double WindowMeanSink::group_mean() const {
  const auto m = agent_means();
  if (m.empty()) throw std::runtime_error("no agent present in the analysis window");
  return stats::mean(m);
}

// ---------------------------------------------------------------------------

void parallel_for(std::size_t jobs, unsigned threads, const std::function<void(std::size_t)>& task,
                  const Progress& progress) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(jobs, 1)));
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
      const std::size_t d = done.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard lock(mu);
        progress(d, jobs);
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

SessionConfig sweep_session(const SweepSpec& spec, std::size_t size, std::optional<double> theta,
                            std::optional<double> beta, int field, std::size_t replicate) {
  const auto find_index = [](const std::vector<double>& grid, std::optional<double> v) -> std::uint64_t {
    if (!v) return 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (std::abs(grid[i] - *v) < 1e-9) return i;
    throw std::invalid_argument("parameter value not on the sweep grid");
  };
  StrategyParams p = spec.base;
  if (theta) p.theta_exp = *theta;
  if (beta) p.beta = *beta;
  if (spec.uses_epsilon()) p.epsilon = spec.epsilon;

  SessionConfig c;
  c.field = standard_field(spec.field_kind, field, spec.duration, spec.noise_weight);
  c.field_id = field;
  c.duration = spec.duration;
  c.scheme = ControlScheme::of(spec.scheme);
  c.seats = homogeneous_seats(spec.model, p, size);
  // Seeds do not include the field kind or noise weight, so conditions that
  // differ only in the field run matched replicates.
  c.seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(spec.model), size,
                                   find_index(spec.theta, theta), find_index(spec.beta, beta),
                                   static_cast<std::uint64_t>(field), replicate});
  return c;
}

SweepResult run_sweep(const SweepSpec& spec, const Progress& progress) {
  spec.validate();
  const auto cells = enumerate_cells(spec);
  const std::size_t per_cell = spec.fields.size() * spec.replicates;

  std::map<int, std::shared_ptr<const ScoreField>> fields;
  for (int f : spec.fields)
    fields.emplace(f, std::make_shared<ScoreField>(ScoreField::build(
                          standard_field(spec.field_kind, f, spec.duration, spec.noise_weight))));

  if (spec.write_logs) std::filesystem::create_directories(std::filesystem::path(spec.output) / "logs");

  SweepResult result;
  result.rows.resize(cells.size() * per_cell);
  const Window window = spec.analysis_window();
  parallel_for(
      result.rows.size(), spec.threads,
      [&](std::size_t job) {
        const Cell& cell = cells[job / per_cell];
        const std::size_t k = job % per_cell;
        const int field = spec.fields[k / spec.replicates];
        const std::size_t rep = k % spec.replicates;
        SweepRow& row = result.rows[job];
        row.model = spec.model;
        row.size = cell.size;
        row.theta = cell.theta;
        row.beta = cell.beta;
        if (spec.uses_epsilon()) row.epsilon = spec.epsilon;
        row.field = field;
        row.replicate = rep;
        const SessionConfig config = sweep_session(spec, cell.size, cell.theta, cell.beta, field, rep);
        row.seed = config.seed;
        WindowMeanSink mean(window);
        try {
          if (spec.write_logs) {
            LogSink log;
            TeeSink tee(mean, log);
            run_session(config, fields.at(field), tee);
            log.log().save((std::filesystem::path(spec.output) / "logs" / log_name(spec, cell, field, rep)).string());
          } else {
            run_session(config, fields.at(field), mean);
          }
          row.mean_second_half = mean.group_mean();
        } catch (const SessionAborted& e) {
          row.aborted = true;
          row.diagnostic = e.what();
        }
      },
      progress);

  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    CellSummary s;
    s.model = spec.model;
    s.size = cells[ci].size;
    s.theta = cells[ci].theta;
    s.beta = cells[ci].beta;
    if (spec.uses_epsilon()) s.epsilon = spec.epsilon;
    std::vector<double> v;
    for (std::size_t k = 0; k < per_cell; ++k) {
      const auto& row = result.rows[ci * per_cell + k];
      if (row.aborted)
        ++s.aborted;
      else
        v.push_back(row.mean_second_half);
    }
    s.n = v.size();
    if (!v.empty()) s.ci = stats::bootstrap_mean(v, spec.resamples, derive_seed(spec.seed, {kBootstrapStream, ci}));
    result.cells.push_back(s);
  }
  return result;
}

const CellSummary* SweepResult::cell(std::size_t size, std::optional<double> theta,
                                     std::optional<double> beta) const {
  for (const auto& c : cells)
    if (c.size == size && same(c.theta, theta) && same(c.beta, beta)) return &c;
  return nullptr;
}

std::vector<double> SweepResult::values(const CellSummary& c) const {
  std::vector<double> out;
  for (const auto& r : rows)
    if (!r.aborted && r.size == c.size && same(r.theta, c.theta) && same(r.beta, c.beta) &&
        r.model == c.model)
      out.push_back(r.mean_second_half);
  return out;
}

std::string rows_to_tsv(const std::vector<SweepRow>& rows) {
  std::string out = "model\tsize\ttheta\tbeta\teps\tfield\treplicate\tmean_second_half\tstatus\n";
  for (const auto& r : rows)
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", to_string(r.model), r.size, fmt_opt(r.theta),
                       fmt_opt(r.beta), fmt_opt(r.epsilon), r.field, r.replicate,
                       r.aborted ? std::string("NA") : fmt::format("{:.6f}", r.mean_second_half),
                       r.aborted ? "aborted" : "ok");
  return out;
}

std::string cells_to_tsv(const std::vector<CellSummary>& cells) {
  std::string out = "model\tsize\ttheta\tbeta\teps\tn\taborted\tmean\tci_lo\tci_hi\n";
  for (const auto& c : cells) {
    if (c.n == 0) {
      out += fmt::format("{}\t{}\t{}\t{}\t{}\t0\t{}\tNA\tNA\tNA\n", to_string(c.model), c.size, fmt_opt(c.theta),
                         fmt_opt(c.beta), fmt_opt(c.epsilon), c.aborted);
      continue;
    }
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\n", to_string(c.model), c.size,
                       fmt_opt(c.theta), fmt_opt(c.beta), fmt_opt(c.epsilon), c.n, c.aborted, c.ci.estimate,
                       c.ci.lo, c.ci.hi);
  }
  return out;
}

stats::BootstrapCI size_slope(const SweepResult& result, std::size_t resamples, std::uint64_t seed,
                              std::optional<double> theta, std::optional<double> beta) {
  std::vector<double> xs;
  std::vector<std::vector<double>> groups;
  for (const auto& c : result.cells) {
    if (!same(c.theta, theta) || !same(c.beta, beta) || c.n == 0) continue;
    xs.push_back(static_cast<double>(c.size));
    groups.push_back(result.values(c));
  }
  return stats::bootstrap_slope(xs, groups, resamples, seed);
}

void write_sweep(const SweepSpec& spec, const SweepResult& result) {
  if (spec.output.empty()) return;
  const std::filesystem::path dir(spec.output);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "rows.tsv") << rows_to_tsv(result.rows);
  std::ofstream(dir / "cells.tsv") << cells_to_tsv(result.cells);
  nlohmann::json j = spec;
  std::ofstream(dir / "spec.json") << j.dump(2) << '\n';
}

// Exp 3 ---------------------------------------------------------------------

void Exp3Spec::validate() const {
  if (!(noise_weight > 0.0 && noise_weight <= 1.0)) throw std::invalid_argument("noise weight must lie in (0,1]");
  as_sweep().validate();
}

SweepSpec Exp3Spec::as_sweep() const {
  SweepSpec s;
  s.model = model;
  s.sizes = sizes;
  s.theta = {params.theta_exp};
  s.beta = {params.beta};
  s.epsilon = params.epsilon;
  s.replicates = replicates;
  s.fields = fields;
  s.seed = seed;
  s.output = output;
  s.field_kind = FieldKind::noisy_blend;
  s.noise_weight = noise_weight;
  s.scheme = SchemeKind::turn_keys;
  s.duration = duration;
  s.window = second_half(duration);
  s.base = params;
  s.threads = threads;
  s.resamples = resamples;
  s.write_logs = write_logs;
  return s;
}

void to_json(nlohmann::json& j, const Exp3Spec& s) {
  j = nlohmann::json{{"noise_weight", s.noise_weight},
                     {"sizes", s.sizes},
                     {"replicates", s.replicates},
                     {"fields", s.fields},
                     {"seed", s.seed},
                     {"model", to_string(s.model)},
                     {"params", s.params},
                     {"duration", s.duration},
                     {"exclude_low_noise_size6", s.exclude_low_noise_size6},
                     {"output", s.output},
                     {"write_logs", s.write_logs},
                     {"threads", s.threads},
                     {"resamples", s.resamples}};
}

void from_json(const nlohmann::json& j, Exp3Spec& s) {
  const Exp3Spec d;
  s.noise_weight = j.value("noise_weight", d.noise_weight);
  s.sizes = j.value("sizes", d.sizes);
  s.replicates = j.value("replicates", d.replicates);
  s.fields = j.value("fields", d.fields);
  s.seed = j.value("seed", d.seed);
  s.model = strategy_from_string(j.value("model", std::string(to_string(d.model))));
  s.params = j.contains("params") ? j.at("params").get<StrategyParams>() : d.params;
  s.duration = j.value("duration", d.duration);
  s.exclude_low_noise_size6 = j.value("exclude_low_noise_size6", d.exclude_low_noise_size6);
  s.output = j.value("output", d.output);
  s.write_logs = j.value("write_logs", d.write_logs);
  s.threads = j.value("threads", d.threads);
  s.resamples = j.value("resamples", d.resamples);
}

SweepResult run_exp3(const Exp3Spec& spec, const Progress& progress) {
  spec.validate();
  SweepResult r = run_sweep(spec.as_sweep(), progress);
  if (spec.exclude_low_noise_size6 && std::abs(spec.noise_weight - 0.10) < 1e-9)
    std::erase_if(r.cells, [](const CellSummary& c) { return c.size == 6; });
  return r;
}

std::vector<ReplayLog> exp3_logs(const Exp3Spec& spec, std::size_t size, std::size_t replicates) {
  spec.validate();
  const SweepSpec s = spec.as_sweep();
  std::vector<ReplayLog> logs(replicates * spec.fields.size());
  std::map<int, std::shared_ptr<const ScoreField>> fields;
  for (int f : spec.fields)
    fields.emplace(f, std::make_shared<ScoreField>(
                          ScoreField::build(standard_field(FieldKind::noisy_blend, f, spec.duration, spec.noise_weight))));
  parallel_for(logs.size(), spec.threads, [&](std::size_t job) {
    const int field = spec.fields[job / replicates];
    const auto config = sweep_session(s, size, std::nullopt, std::nullopt, field, job % replicates);
    LogSink sink;
    run_session(config, fields.at(field), sink);
    logs[job] = sink.take();
  });
  return logs;
}

// Exp 2 ---------------------------------------------------------------------

void Exp2Spec::validate() const {
  script.validate();
  participant.params.validate();
  if (runs == 0) throw std::invalid_argument("runs must be at least 1");
}

void to_json(nlohmann::json& j, const Exp2Spec& s) {
  j = nlohmann::json{{"script", s.script},
                     {"participant", {{"strategy", to_string(s.participant.strategy)}, {"params", s.participant.params}}},
                     {"runs", s.runs},
                     {"seed", s.seed},
                     {"both_rounds", s.both_rounds},
                     {"output", s.output}};
}

void from_json(const nlohmann::json& j, Exp2Spec& s) {
  const Exp2Spec d;
  s.script = j.contains("script") ? j.at("script").get<ScenarioScript>() : d.script;
  s.participant = d.participant;
  if (j.contains("participant")) {
    const auto& p = j.at("participant");
    s.participant.strategy = strategy_from_string(p.value("strategy", std::string(to_string(d.participant.strategy))));
    if (p.contains("params")) s.participant.params = p.at("params").get<StrategyParams>();
  }
  s.runs = j.value("runs", d.runs);
  s.seed = j.value("seed", d.seed);
  s.both_rounds = j.value("both_rounds", d.both_rounds);
  s.output = j.value("output", d.output);
}

std::vector<Exp2Run> run_exp2(const Exp2Spec& spec, const Progress& progress) {
  spec.validate();
  std::vector<Exp2Run> out(spec.runs);
  parallel_for(
      spec.runs, 0,
      [&](std::size_t i) {
        Exp2Run& run = out[i];
        run.seed = derive_seed(spec.seed, {i});
        ScenarioScript social = spec.script;
        social.social = true;
        run.social = run_exp2_scenario(social, spec.participant, run.seed);
        if (spec.both_rounds) {
          ScenarioScript alone = spec.script;
          alone.social = false;
          run.nonsocial = run_exp2_scenario(alone, spec.participant, run.seed);
        }
      },
      progress);
  if (!spec.output.empty()) {
    const std::filesystem::path dir(spec.output);
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i].social.save((dir / fmt::format("exp2_{:04}_social.jsonl", i)).string());
      if (out[i].nonsocial) out[i].nonsocial->save((dir / fmt::format("exp2_{:04}_nonsocial.jsonl", i)).string());
    }
  }
  return out;
}

}  // namespace csense
