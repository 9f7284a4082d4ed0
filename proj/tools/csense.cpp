// Command-line front end: batch experiments, log analyses, single sessions
// and the live server.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "csense/analysis.hpp"
#include "csense/classifier.hpp"
#include "csense/session.hpp"
#include "csense/simharness.hpp"

#ifdef CSENSE_WITH_SERVER
#include "csense/server/ws_server.hpp"
#endif

using namespace csense;
namespace fs = std::filesystem;

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path));
  return nlohmann::json::parse(in);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
}

void progress_line(std::size_t done, std::size_t total) {
  if (done == total || done % 50 == 0) std::cerr << fmt::format("\r{}/{}", done, total) << (done == total ? "\n" : "");
}

struct AnalysisOptions {
  std::vector<std::string> logs;
  std::string window;
  std::size_t bins = 20;
  std::size_t resamples = stats::kDefaultResamples;
  std::uint64_t seed = 1;
  std::string out;  // directory; empty prints the summary table
};

void add_analysis_options(CLI::App* cmd, AnalysisOptions& o, bool bins) {
  cmd->add_option("logs", o.logs, "ReplayLog paths or globs")->required();
  cmd->add_option("--window", o.window, "analysis window begin:end, ticks");
  if (bins) cmd->add_option("--bins", o.bins, "score bins")->check(CLI::PositiveNumber);
  cmd->add_option("--resamples", o.resamples, "bootstrap resamples")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "bootstrap seed");
  cmd->add_option("--out", o.out, "output directory for tables and plot data");
}

struct LoadedLogs {
  std::vector<ReplayLog> logs;
  std::vector<std::string> paths;
  std::vector<analysis::GroupLog> groups;
};

LoadedLogs load_logs(const std::vector<std::string>& patterns) {
  LoadedLogs l;
  l.paths = analysis::expand_paths(patterns);
  if (l.paths.empty()) throw std::runtime_error("no logs matched");
  for (const auto& p : l.paths) l.logs.push_back(ReplayLog::load(p));
  for (std::size_t i = 0; i < l.logs.size(); ++i) l.groups.push_back({fs::path(l.paths[i]).stem().string(), &l.logs[i]});
  return l;
}

std::optional<Window> window_of(const AnalysisOptions& o) {
  if (o.window.empty()) return std::nullopt;
  return analysis::parse_window(o.window);
}

void emit(const AnalysisOptions& o, const std::string& name, const std::string& rows, const std::string& summary,
          std::span<const analysis::PlotPoint> plot) {
  if (o.out.empty()) {
    std::cout << summary;
    return;
  }
  const fs::path dir(o.out);
  write_text(dir / (name + "_rows.tsv"), rows);
  write_text(dir / (name + "_summary.tsv"), summary);
  write_text(dir / (name + "_plot.tsv"), analysis::plot_tsv(plot));
  std::cout << summary;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collective foraging simulation, analysis and live game server"};
  app.require_subcommand(1);

  // Batch experiments -------------------------------------------------------
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;

  auto* sweep = app.add_subcommand("sweep", "group-size and parameter sweep");
  sweep->add_option("config", config_path, "sweep configuration (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--seed", seed_override, "base seed override");
  sweep->add_option("--out", out_override, "output directory override");

  auto* exp3 = app.add_subcommand("exp3", "turn-keys noise-condition runs");
  exp3->add_option("config", config_path, "Exp-3 configuration (JSON)")->required()->check(CLI::ExistingFile);
  exp3->add_option("--seed", seed_override, "base seed override");
  exp3->add_option("--out", out_override, "output directory override");

  auto* exp2 = app.add_subcommand("exp2", "scripted-bot scenario runs");
  exp2->add_option("config", config_path, "Exp-2 configuration (JSON)")->required()->check(CLI::ExistingFile);
  exp2->add_option("--seed", seed_override, "base seed override");
  exp2->add_option("--out", out_override, "output directory override");

  // Analyses ----------------------------------------------------------------
  AnalysisOptions ao;
  auto* perf = app.add_subcommand("perf", "mean performance by group size");
  add_analysis_options(perf, ao, false);
  auto* speed = app.add_subcommand("speed", "speed with and without reward");
  add_analysis_options(speed, ao, false);
  auto* proximity = app.add_subcommand("proximity", "click proximity to exploiting and other agents");
  add_analysis_options(proximity, ao, false);
  auto* states = app.add_subcommand("states", "state probabilities by own score");
  add_analysis_options(states, ao, true);
  std::vector<std::string> label_files;
  states->add_option("--labels", label_files, "label files, one per log, in the same order");

  std::string classify_log_path, classify_out;
  auto* classify = app.add_subcommand("classify", "label every agent-tick of a log");
  classify->add_option("log", classify_log_path, "ReplayLog")->required()->check(CLI::ExistingFile);
  classify->add_option("-o,--out", classify_out, "label file (default: stdout)");

  // Sessions ----------------------------------------------------------------
  std::string run_out;
  auto* run = app.add_subcommand("run", "run one headless session");
  run->add_option("config", config_path, "session configuration (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed_override, "seed override");
  run->add_option("-o,--out", run_out, "log path (default: stdout)");

  std::string serve_config;
  std::optional<std::uint16_t> serve_port;
  auto* serve = app.add_subcommand("serve", "run the live game server");
  serve->add_option("config", serve_config, "server configuration (JSON)")->check(CLI::ExistingFile);
  serve->add_option("--port", serve_port, "listen port override");
  serve->add_option("--seed", seed_override, "base seed override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed()) {
      auto spec = read_json(config_path).get<SweepSpec>();
      if (seed_override) spec.seed = *seed_override;
      if (out_override) spec.output = *out_override;
      const auto result = run_sweep(spec, progress_line);
      write_sweep(spec, result);
      std::cout << cells_to_tsv(result.cells);
    } else if (exp3->parsed()) {
      auto spec = read_json(config_path).get<Exp3Spec>();
      if (seed_override) spec.seed = *seed_override;
      if (out_override) spec.output = *out_override;
      const auto result = run_exp3(spec, progress_line);
      write_sweep(spec.as_sweep(), result);
      std::cout << cells_to_tsv(result.cells);
    } else if (exp2->parsed()) {
      auto spec = read_json(config_path).get<Exp2Spec>();
      if (seed_override) spec.seed = *seed_override;
      if (out_override) spec.output = *out_override;
      const auto runs = run_exp2(spec, progress_line);
      std::vector<analysis::GroupLog> groups;
      for (std::size_t i = 0; i < runs.size(); ++i) {
        groups.push_back({std::to_string(i), &runs[i].social});
        if (runs[i].nonsocial) groups.push_back({std::to_string(i), &*runs[i].nonsocial});
      }
      const auto report = analysis::click_proximity(groups);
      const auto summary = analysis::summarize_proximity(report, stats::kDefaultResamples, spec.seed);
      if (!spec.output.empty()) {
        write_text(fs::path(spec.output) / "proximity_rows.tsv", analysis::proximity_tsv(report));
        write_text(fs::path(spec.output) / "proximity_summary.tsv", analysis::proximity_summary_tsv(summary));
      }
      std::cout << analysis::proximity_summary_tsv(summary);
    } else if (perf->parsed()) {
      const auto l = load_logs(ao.logs);
      const auto r = analysis::mean_performance(l.groups, window_of(ao), ao.resamples, ao.seed);
      emit(ao, "perf", analysis::performance_tsv(r), analysis::performance_summary_tsv(r),
           analysis::plot_performance(r));
    } else if (speed->parsed()) {
      const auto l = load_logs(ao.logs);
      const auto r = analysis::speed_by_reward(l.groups, window_of(ao), ao.resamples, ao.seed);
      std::string summary = fmt::format("rewarded\tunrewarded\tratio\tpaired\tnever_rewarded\twall_ticks_excluded\n"
                                        "{:.4f}\t{:.4f}\t{}\t{}\t{}\t{}\n",
                                        r.rewarded_mean, r.unrewarded_mean,
                                        r.ratio ? fmt::format("{:.4f}", *r.ratio) : "NA", r.paired,
                                        r.never_rewarded, r.wall_ticks_excluded);
      emit(ao, "speed", analysis::speed_tsv(r), summary, analysis::plot_speed(r));
    } else if (proximity->parsed()) {
      const auto l = load_logs(ao.logs);
      const auto r = analysis::click_proximity(l.groups);
      const auto s = analysis::summarize_proximity(r, ao.resamples, ao.seed);
      emit(ao, "proximity", analysis::proximity_tsv(r), analysis::proximity_summary_tsv(s),
           analysis::plot_proximity(s));
    } else if (states->parsed()) {
      const auto l = load_logs(ao.logs);
      std::vector<std::vector<LabelRecord>> labels;
      if (!label_files.empty()) {
        const auto paths = analysis::expand_paths(label_files);
        if (paths.size() != l.logs.size())
          throw std::runtime_error(fmt::format("{} label files for {} logs", paths.size(), l.logs.size()));
        for (const auto& p : paths) {
          std::ifstream in(p);
          std::stringstream ss;
          ss << in.rdbuf();
          labels.push_back(labels_from_jsonl(ss.str()));
        }
      }
      const auto r = analysis::state_metrics(l.groups, labels, ao.bins, ao.resamples, ao.seed);
      if (!ao.out.empty()) write_text(fs::path(ao.out) / "copy_targets.tsv", analysis::copy_targets_tsv(r));
      emit(ao, "states", analysis::states_tsv(r), analysis::states_tsv(r), analysis::plot_states(r));
    } else if (classify->parsed()) {
      const auto text = labels_to_jsonl(classify_log(ReplayLog::load(classify_log_path)));
      if (classify_out.empty())
        std::cout << text;
      else
        write_text(classify_out, text);
    } else if (run->parsed()) {
      auto config = read_json(config_path).get<SessionConfig>();
      if (seed_override) config.seed = *seed_override;
      const auto log = run_session(config);
      if (run_out.empty())
        std::cout << log.to_jsonl();
      else
        log.save(run_out);
    } else if (serve->parsed()) {
#ifdef CSENSE_WITH_SERVER
      server::ServerConfig sc;
      if (!serve_config.empty()) sc = read_json(serve_config).get<server::ServerConfig>();
      if (serve_port) sc.port = *serve_port;
      if (seed_override) sc.seed = *seed_override;
      server::GameServer gs(sc);
      const auto port = gs.listen();
      std::cerr << fmt::format("listening on {}:{}, logs in {}\n", sc.address, port, sc.log_dir);
      gs.run(true);
      std::cerr << fmt::format("stopped after {} sessions\n", gs.sessions_finished());
#else
      std::cerr << "built without the live server\n";
      return 2;
#endif
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
