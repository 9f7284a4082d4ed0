#pragma once
// Batch runner for group-size and parameter sweeps, Exp-3 noise-condition
// runs and Exp-2 scenario batches.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "csense/scenario.hpp"
#include "csense/session.hpp"
#include "csense/stats.hpp"

namespace csense {

/// Analysis window [begin, end) in ticks.
struct Window {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const { return end > begin ? end - begin : 0; }
  bool contains(std::size_t t) const { return t >= begin && t < end; }
  friend bool operator==(const Window&, const Window&) = default;
};

/// Second half: everything after the opening 2.5 minutes.
inline constexpr std::size_t kSecondHalfStart = 1200;
inline Window second_half(std::size_t duration) { return {kSecondHalfStart, duration}; }

struct SweepSpec {
  StrategyKind model = StrategyKind::asocial;
  std::vector<std::size_t> sizes{1, 2, 3, 4, 5, 6};
  std::vector<double> theta{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> beta{0.25, 0.5, 0.75, 1.0};
  double epsilon = 0.15;
  std::size_t replicates = 50;
  std::vector<int> fields{0, 1, 2, 3};
  std::uint64_t seed = 1;
  std::string output;  // directory; empty means no files

  FieldKind field_kind = FieldKind::spotlight;
  double noise_weight = 0.0;
  SchemeKind scheme = SchemeKind::click_steer;
  std::size_t duration = 2400;
  std::optional<Window> window;  // default: second half
  StrategyParams base{};         // remaining knobs
  unsigned threads = 0;          // 0 = hardware concurrency
  std::size_t resamples = stats::kDefaultResamples;
  bool write_logs = false;       // one JSONL log per session under output/logs

  bool uses_theta() const;
  bool uses_beta() const;
  bool uses_epsilon() const;
  Window analysis_window() const { return window.value_or(second_half(duration)); }
  void validate() const;
};

void to_json(nlohmann::json& j, const SweepSpec& s);
void from_json(const nlohmann::json& j, SweepSpec& s);

struct SweepRow {
  StrategyKind model = StrategyKind::asocial;
  std::size_t size = 0;
  std::optional<double> theta;
  std::optional<double> beta;
  std::optional<double> epsilon;
  int field = 0;
  std::size_t replicate = 0;
  double mean_second_half = 0.0;
  std::uint64_t seed = 0;
  bool aborted = false;
  std::string diagnostic;
};

struct CellSummary {
  StrategyKind model = StrategyKind::asocial;
  std::size_t size = 0;
  std::optional<double> theta;
  std::optional<double> beta;
  std::optional<double> epsilon;
  std::size_t n = 0;        // replicates aggregated (aborted rows excluded)
  std::size_t aborted = 0;
  stats::BootstrapCI ci{};  // over replicates (groups)
};

struct SweepResult {
  std::vector<SweepRow> rows;     // cell-major, replicates in order
  std::vector<CellSummary> cells;

  /// Cell for the given coordinates; parameters that do not apply are ignored.
  const CellSummary* cell(std::size_t size, std::optional<double> theta = std::nullopt,
                          std::optional<double> beta = std::nullopt) const;
  /// Per-replicate means of one cell.
  std::vector<double> values(const CellSummary& c) const;
};

/// Mean r_t per visible agent over `window`, averaged over agents.
class WindowMeanSink final : public TickSink {
 public:
  explicit WindowMeanSink(Window w) : window_(w) {}
  void on_tick(const World& world, std::span<const Event> events) override;
  double group_mean() const;
  std::vector<double> agent_means() const;

 private:
  Window window_;
  std::vector<double> sum_;
  std::vector<std::size_t> n_;
};

using Progress = std::function<void(std::size_t done, std::size_t total)>;

/// Runs every (size, theta, beta, field, replicate) combination. Seeds derive
/// from the base seed and the cell indices; results do not depend on the
/// thread count.
SweepResult run_sweep(const SweepSpec& spec, const Progress& progress = {});

/// Session configuration for one sweep row.
SessionConfig sweep_session(const SweepSpec& spec, std::size_t size, std::optional<double> theta,
                            std::optional<double> beta, int field, std::size_t replicate);

std::string rows_to_tsv(const std::vector<SweepRow>& rows);
std::string cells_to_tsv(const std::vector<CellSummary>& cells);

/// Slope of per-size means against size, stratified bootstrap over replicates.
stats::BootstrapCI size_slope(const SweepResult& result, std::size_t resamples, std::uint64_t seed,
                              std::optional<double> theta = std::nullopt,
                              std::optional<double> beta = std::nullopt);

/// Writes rows.tsv and cells.tsv (and logs, if requested) under spec.output.
void write_sweep(const SweepSpec& spec, const SweepResult& result);

// Exp 3 ---------------------------------------------------------------------

struct Exp3Spec {
  double noise_weight = 0.10;  // 0.10 low, 0.25 high
  std::vector<std::size_t> sizes{1, 2, 3, 4, 5, 6};
  std::size_t replicates = 50;
  std::vector<int> fields{0, 1, 2, 3};
  std::uint64_t seed = 3;
  StrategyKind model = StrategyKind::social_inference;
  StrategyParams params{};
  std::size_t duration = 2880;  // 6 minutes
  bool exclude_low_noise_size6 = true;
  std::string output;
  bool write_logs = false;
  unsigned threads = 0;
  std::size_t resamples = stats::kDefaultResamples;

  void validate() const;
  SweepSpec as_sweep() const;
};

void to_json(nlohmann::json& j, const Exp3Spec& s);
void from_json(const nlohmann::json& j, Exp3Spec& s);

/// Turn-keys sessions on noisy-blend fields. Size-6 groups are dropped from
/// the low-noise aggregates when the exclusion flag is set; their rows stay.
SweepResult run_exp3(const Exp3Spec& spec, const Progress& progress = {});

/// Logs of an Exp-3 batch, for the state analyses.
std::vector<ReplayLog> exp3_logs(const Exp3Spec& spec, std::size_t size, std::size_t replicates);

// Exp 2 ---------------------------------------------------------------------

struct Exp2Spec {
  ScenarioScript script{};
  SeatConfig participant{StrategyKind::social_inference, {}, {}, false};
  std::size_t runs = 200;
  std::uint64_t seed = 2;
  bool both_rounds = true;  // also run the matching non-social round per seed
  std::string output;

  void validate() const;
};

void to_json(nlohmann::json& j, const Exp2Spec& s);
void from_json(const nlohmann::json& j, Exp2Spec& s);

struct Exp2Run {
  std::uint64_t seed = 0;
  ReplayLog social;
  std::optional<ReplayLog> nonsocial;
};

std::vector<Exp2Run> run_exp2(const Exp2Spec& spec, const Progress& progress = {});

/// Runs `jobs` tasks on up to `threads` workers (0 = hardware concurrency).
void parallel_for(std::size_t jobs, unsigned threads, const std::function<void(std::size_t)>& task,
                  const Progress& progress = {});

}  // namespace csense
