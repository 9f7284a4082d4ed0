#pragma once
// Behavioural metrics computed from replay logs: performance by group size,
// speed by reward, click proximity and state-by-score curves. Everything
// here is a pure function of the logs, labels and options.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "csense/classifier.hpp"
#include "csense/replay.hpp"
#include "csense/simharness.hpp"
#include "csense/stats.hpp"

namespace csense::analysis {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A log plus the id of the group that produced it.
struct GroupLog {
  std::string group;
  const ReplayLog* log = nullptr;
};

/// Wraps logs with ids "0", "1", ...
std::vector<GroupLog> as_groups(std::span<const ReplayLog> logs);

/// Visible seats declared in the log header.
std::size_t group_size(const ReplayLog& log);
/// Session length declared in the header.
std::size_t session_duration(const ReplayLog& log);
/// Field condition label: "spotlight", "noisy-blend:0.25", "scenario", ...
std::string condition_of(const ReplayLog& log);

/// Parses "begin:end" into a window.
Window parse_window(const std::string& s);

// Performance -----------------------------------------------------------------

struct PerformanceRow {
  std::string group;
  std::size_t size = 0;
  std::string condition;
  int agent = 0;
  Window window{};
  double mean_r = 0.0;
};

struct SizeSummary {
  std::string condition;
  std::size_t size = 0;
  std::size_t groups = 0;
  stats::BootstrapCI ci{};  // bootstrap unit: group
};

struct PerformanceReport {
  std::vector<PerformanceRow> rows;
  std::vector<SizeSummary> sizes;
};

/// Per-agent mean r_t over the window (default: each log's second half),
/// then per-size means with a percentile bootstrap over groups.
PerformanceReport mean_performance(std::span<const GroupLog> logs, std::optional<Window> window = std::nullopt,
                                   std::size_t resamples = stats::kDefaultResamples, std::uint64_t seed = 1);

// Speed by reward -------------------------------------------------------------

struct SpeedRow {
  std::string group;
  int agent = 0;
  std::size_t rewarded_ticks = 0;
  std::size_t unrewarded_ticks = 0;
  std::optional<double> rewarded;    // px/tick
  std::optional<double> unrewarded;  // px/tick
};

struct SpeedReport {
  std::vector<SpeedRow> rows;
  std::size_t paired = 0;
  std::size_t never_rewarded = 0;
  std::size_t wall_ticks_excluded = 0;
  double rewarded_mean = 0.0;    // grand mean over paired agents
  double unrewarded_mean = 0.0;
  std::optional<double> ratio;   // empty when the unrewarded mean is 0
  stats::BootstrapCI rewarded_ci{};
  stats::BootstrapCI unrewarded_ci{};
};

/// Mean displacement per tick with r_t > 0 versus r_t = 0, per agent. Wall
/// ticks are excluded. Agents never rewarded are left out of the paired
/// means and counted separately.
SpeedReport speed_by_reward(std::span<const GroupLog> logs, std::optional<Window> window = std::nullopt,
                            std::size_t resamples = stats::kDefaultResamples, std::uint64_t seed = 1);

// Click proximity -------------------------------------------------------------

struct ClickRow {
  std::string group;
  bool social = true;
  std::string condition;  // baseline | local | distant
  int agent = 0;
  std::size_t t = 0;
  Point at{};
  bool ghosts = false;    // distances measured to simulated bots
  std::optional<double> d_exploiting;
  std::optional<double> d_other;
};

struct ProximityReport {
  std::vector<ClickRow> rows;
  std::size_t skipped = 0;  // clicks with nobody to measure against
};

/// Distance from each click to the nearest stopped and nearest moving other
/// agent, as they stood when the click was made. Rounds without visible
/// agents measure against the ghost bots.
ProximityReport click_proximity(std::span<const GroupLog> logs);

struct ProximitySummary {
  bool social = true;
  std::string condition;
  std::size_t clicks = 0;
  stats::BootstrapCI d_exploiting{};  // median, bootstrap over groups
  stats::BootstrapCI d_other{};
  stats::BootstrapCI gap{};           // median d_other - median d_exploiting
  // Counts cover paired clicks only (both distances defined).
  std::size_t n_exploiting = 0;
  std::size_t n_other = 0;
};

std::vector<ProximitySummary> summarize_proximity(const ProximityReport& report,
                                                  std::size_t resamples = stats::kDefaultResamples,
                                                  std::uint64_t seed = 1);

// State metrics ---------------------------------------------------------------

struct StateBin {
  std::string condition;
  std::size_t bin = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
  double p_exploring = 0.0;
  double p_exploiting = 0.0;
  double p_copying = 0.0;
};

struct CopyTargetSummary {
  std::string condition;
  std::size_t n = 0;
  double mean_target_r = 0.0;
  stats::BootstrapCI ci{};  // bootstrap over groups
};

struct StateReport {
  std::vector<StateBin> bins;  // empty bins are absent
  std::vector<CopyTargetSummary> copy_targets;
};

/// `labels[i]` must label `logs[i]`; an empty span labels every log with the
/// classifier. Ticks are binned by the agent's own r_t.
StateReport state_metrics(std::span<const GroupLog> logs, std::span<const std::vector<LabelRecord>> labels,
                          std::size_t bins = 20, std::size_t resamples = stats::kDefaultResamples,
                          std::uint64_t seed = 1);

// Output ----------------------------------------------------------------------

struct PlotPoint {
  std::string series;
  std::string x;
  double y = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

std::string performance_tsv(const PerformanceReport& r);
std::string performance_summary_tsv(const PerformanceReport& r);
std::string speed_tsv(const SpeedReport& r);
std::string proximity_tsv(const ProximityReport& r);
std::string proximity_summary_tsv(std::span<const ProximitySummary> s);
std::string states_tsv(const StateReport& r);
std::string copy_targets_tsv(const StateReport& r);

std::vector<PlotPoint> plot_performance(const PerformanceReport& r);
std::vector<PlotPoint> plot_speed(const SpeedReport& r);
std::vector<PlotPoint> plot_proximity(std::span<const ProximitySummary> s);
std::vector<PlotPoint> plot_states(const StateReport& r);
/// Columns: series, x, y, ci_lo, ci_hi.
std::string plot_tsv(std::span<const PlotPoint> points);

/// Expands paths and simple globs ('*' and '?' in the file name part),
/// sorted per pattern.
std::vector<std::string> expand_paths(std::span<const std::string> patterns);

}  // namespace csense::analysis
