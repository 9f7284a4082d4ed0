#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "csense/geometry.hpp"

namespace csense {

class FieldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-tick centre sequence of a drifting circular scoring region.
struct SpotlightPath {
  std::uint64_t seed = 0;
  double diameter = kSpotlightDiameter;
  double speed = kSlowSpeed;
  std::vector<Point> centers;    // one per tick
  std::vector<Point> waypoints;  // targets in the order they were visited

  std::size_t duration() const { return centers.size(); }
  Point center(std::size_t t) const { return centers.at(t); }
};

/// Random-waypoint drift. Waypoints are uniform over the arena inset by the
/// spotlight radius, so the region never leaves the arena. If `start` is
/// given the path begins there instead of at a random point.
SpotlightPath generate_spotlight_path(std::uint64_t seed, const Arena& arena, double speed,
                                      std::size_t duration_ticks,
                                      std::optional<Point> start = std::nullopt);

/// Perimeter traversal: the centre runs along the arena boundary rectangle
/// with a direction (clockwise or not) and starting point fixed by the seed.
/// If `start` is given it is projected onto the perimeter and used instead.
SpotlightPath generate_wall_path(std::uint64_t seed, const Arena& arena, double speed,
                                 std::size_t duration_ticks,
                                 std::optional<Point> start = std::nullopt);

struct NoiseParams {
  double cell_size = 24.0;   // px between lattice nodes
  double rho = 0.95;         // AR(1) coefficient per tick
  double sigma = 36.0;       // Gaussian smoothing radius, px
  std::uint64_t seed = 0;

  friend bool operator==(const NoiseParams&, const NoiseParams&) = default;
};

/// Spatially correlated, temporally evolving noise, pre-rendered for every
/// tick on a coarse lattice and bilinearly interpolated between nodes.
/// Every tick is min-max normalised to [0, 1] after smoothing.
class NoiseGrid {
 public:
  NoiseGrid(const NoiseParams& params, const Arena& arena, std::size_t duration_ticks);

  /// Throws FieldError for positions outside the arena or ticks past the end.
  double value(Point p, std::size_t t) const;

  const NoiseParams& params() const { return params_; }
  std::size_t duration() const { return duration_; }
  std::size_t nodes_x() const { return nx_; }
  std::size_t nodes_y() const { return ny_; }
  /// Lattice values for one tick, row-major nodes_x() * nodes_y().
  std::span<const double> tick_nodes(std::size_t t) const;

 private:
  NoiseParams params_;
  Arena arena_;
  std::size_t duration_ = 0;
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<double> values_;
};

/// Normalised 1-D Gaussian taps for a smoothing radius expressed in lattice
/// cells, truncated at three standard deviations.
std::vector<double> gaussian_taps(double sigma_cells);

enum class FieldKind { spotlight, wall_follow, noisy_blend, zero, superposed };

std::string_view to_string(FieldKind k);
FieldKind field_kind_from_string(std::string_view s);

/// Declarative description of a score field; serialisable into the harness
/// configuration and the replay log header.
struct FieldSpec {
  FieldKind kind = FieldKind::spotlight;
  double noise_weight = 0.0;
  std::size_t duration = 2400;
  std::uint64_t seed = 0;
  double speed = kSlowSpeed;
  NoiseParams noise{};
  std::vector<FieldSpec> components;  // superposed only

  /// Throws FieldError when the invariants tying kind and weight are broken.
  void validate() const;
};

/// Interface the engine scores against. Implementations are immutable after
/// construction except where documented (scenario fields).
class FieldSource {
 public:
  virtual ~FieldSource() = default;
  /// Score in [0, 1]. Throws FieldError for out-of-range ticks or positions.
  virtual double value(Point p, std::size_t t) const = 0;
  /// Score as seen by one seat. Fields with per-seat regions override this.
  virtual double value_for(std::size_t seat, Point p, std::size_t t) const {
    (void)seat;
    return value(p, t);
  }
  /// Centres of the scoring regions active at tick t (private; logging only).
  virtual std::vector<Point> centers(std::size_t t) const = 0;
  virtual std::size_t duration() const = 0;
  /// True for graded (noise-blended) landscapes, false for binary ones.
  virtual bool graded() const = 0;
};

/// A field realised from a FieldSpec. Cheap to copy: generated paths and
/// noise lattices are shared immutably.
class ScoreField final : public FieldSource {
 public:
  static ScoreField build(const FieldSpec& spec, const Arena& arena = {});

  double value(Point p, std::size_t t) const override;
  std::vector<Point> centers(std::size_t t) const override;
  std::size_t duration() const override { return spec_.duration; }
  bool graded() const override;

  const FieldSpec& spec() const { return spec_; }
  const Arena& arena() const { return arena_; }
  const SpotlightPath* path() const { return path_.get(); }
  const NoiseGrid* noise() const { return noise_.get(); }

 private:
  double value_unchecked(Point p, std::size_t t) const;

  FieldSpec spec_;
  Arena arena_;
  std::shared_ptr<const SpotlightPath> path_;
  std::shared_ptr<const NoiseGrid> noise_;
  std::vector<ScoreField> components_;
};

/// 1 inside the disk of the spotlight diameter around `centre`, else 0.
inline double spotlight_value(Point centre, Point p) {
  return distance_sq(centre, p) <= kSpotlightRadius * kSpotlightRadius ? 1.0 : 0.0;
}

/// Pre-generated field-ids 0-3 per condition: the field description for a given id.
FieldSpec standard_field(FieldKind kind, int field_id, std::size_t duration,
                         double noise_weight = 0.0, std::uint64_t bank_seed = 20161026);

/// Line-delimited (tick, cx, cy) export of a path for debugging.
std::string path_to_lines(const SpotlightPath& path);

/// Evaluates the field on every (xs[i], ys[i]) at tick t. Uses the SIMD
/// kernels; equivalent to calling value() per point.
void evaluate_batch(const ScoreField& field, std::span<const double> xs,
                    std::span<const double> ys, std::size_t t, std::span<double> out);

}  // namespace csense
