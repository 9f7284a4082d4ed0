#include "csense/scorefield.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "csense/kernels/kernels.hpp"
#include "csense/rng.hpp"

namespace csense {

namespace {

Point uniform_inset(Rng& rng, const Arena& arena, double inset) {
  const double x = rng.uniform(inset, arena.width - inset);
  const double y = rng.uniform(inset, arena.height - inset);
  return {x, y};
}

Point clamp_inset(Point p, const Arena& arena, double inset) {
  return {std::clamp(p.x, inset, arena.width - inset), std::clamp(p.y, inset, arena.height - inset)};
}

void check_path_args(const Arena& arena, double speed, std::size_t duration) {
  if (!(arena.width > 0.0) || !(arena.height > 0.0)) throw FieldError("arena must have positive size");
  if (!(speed > 0.0)) throw FieldError("path speed must be positive");
  if (duration == 0) throw FieldError("path duration must be positive");
}

// Perimeter parameterisation: s = 0 at the top-left corner, increasing
// clockwise on screen (right along the top edge, down the right edge...).
Point perimeter_point(double s, const Arena& a) {
  const double w = a.width;
  const double h = a.height;
  if (s < w) return {s, 0.0};
  if (s < w + h) return {w, s - w};
  if (s < 2 * w + h) return {w - (s - w - h), h};
  return {0.0, h - (s - 2 * w - h)};
}

double perimeter_param(Point p, const Arena& a) {
  const double w = a.width;
  const double h = a.height;
  const double x = std::clamp(p.x, 0.0, w);
  const double y = std::clamp(p.y, 0.0, h);
  // Snap to the nearest edge.
  const double d_top = y;
  const double d_right = w - x;
  const double d_bottom = h - y;
  const double d_left = x;
  const double m = std::min({d_top, d_right, d_bottom, d_left});
  if (m == d_top) return x;
  if (m == d_right) return w + y;
  if (m == d_bottom) return w + h + (w - x);
  return 2 * w + h + (h - y);
}

}  // namespace

SpotlightPath generate_spotlight_path(std::uint64_t seed, const Arena& arena, double speed,
                                      std::size_t duration_ticks, std::optional<Point> start) {
  check_path_args(arena, speed, duration_ticks);
  const double inset = kSpotlightRadius;
  Rng rng(seed);
  SpotlightPath path;
  path.seed = seed;
  path.speed = speed;
  path.centers.reserve(duration_ticks);

  const double step = speed * kTickSeconds;
  Point c = start ? clamp_inset(*start, arena, inset) : uniform_inset(rng, arena, inset);
  Point target = uniform_inset(rng, arena, inset);
  path.waypoints.push_back(target);
  path.centers.push_back(c);
  while (path.centers.size() < duration_ticks) {
    const double d = distance(c, target);
    if (d <= step) {
      c = target;
      target = uniform_inset(rng, arena, inset);
      path.waypoints.push_back(target);
    } else {
      c = {c.x + (target.x - c.x) / d * step, c.y + (target.y - c.y) / d * step};
    }
    path.centers.push_back(c);
  }
  return path;
}

SpotlightPath generate_wall_path(std::uint64_t seed, const Arena& arena, double speed,
                                 std::size_t duration_ticks, std::optional<Point> start) {
  check_path_args(arena, speed, duration_ticks);
  Rng rng(seed);
  const double perimeter = 2.0 * (arena.width + arena.height);
  const double step = speed * kTickSeconds;
  double s = start ? perimeter_param(*start, arena) : rng.uniform(0.0, perimeter);
  const bool clockwise = rng.bernoulli(0.5);

  SpotlightPath path;
  path.seed = seed;
  path.speed = speed;
  path.centers.reserve(duration_ticks);
  const double corners[4] = {0.0, arena.width, arena.width + arena.height,
                             2 * arena.width + arena.height};
  auto edge_of = [&](double v) {
    int e = 0;
    for (int i = 0; i < 4; ++i)
      if (v >= corners[i]) e = i;
    return e;
  };
  path.centers.push_back(perimeter_point(s, arena));
  while (path.centers.size() < duration_ticks) {
    const int before = edge_of(s);
    s += clockwise ? step : -step;
    if (s >= perimeter) s -= perimeter;
    if (s < 0.0) s += perimeter;
    const int after = edge_of(s);
    if (after != before) {
      // Crossed a corner: record it as a visited waypoint.
      const int corner = clockwise ? after : before;
      path.waypoints.push_back(perimeter_point(corners[corner], arena));
    }
    path.centers.push_back(perimeter_point(s, arena));
  }
  return path;
}

std::vector<double> gaussian_taps(double sigma_cells) {
  if (!(sigma_cells > 0.0)) return {1.0};
  const int half = static_cast<int>(std::ceil(3.0 * sigma_cells));
  std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
  double total = 0.0;
  for (int k = -half; k <= half; ++k) {
    const double w = std::exp(-0.5 * (k * k) / (sigma_cells * sigma_cells));
    taps[static_cast<std::size_t>(k + half)] = w;
    total += w;
  }
  for (double& w : taps) w /= total;
  return taps;
}

NoiseGrid::NoiseGrid(const NoiseParams& params, const Arena& arena, std::size_t duration_ticks)
    : params_(params), arena_(arena), duration_(duration_ticks) {
  if (!(params.cell_size > 0.0)) throw FieldError("noise cell size must be positive");
  if (params.rho < 0.0 || params.rho > 1.0) throw FieldError("noise rho must lie in [0,1]");
  if (duration_ticks == 0) throw FieldError("noise duration must be positive");
  nx_ = static_cast<std::size_t>(std::ceil(arena.width / params.cell_size)) + 1;
  ny_ = static_cast<std::size_t>(std::ceil(arena.height / params.cell_size)) + 1;
  const std::size_t n = nx_ * ny_;
  values_.resize(n * duration_ticks);

  Rng rng(params.seed);
  std::vector<double> state(n);
  for (double& z : state) z = rng.normal();
  const double innovation = std::sqrt(std::max(0.0, 1.0 - params.rho * params.rho));
  const auto taps = gaussian_taps(params.sigma / params.cell_size);
  std::vector<double> tmp(n);
  std::vector<double> smooth(n);

  for (std::size_t t = 0; t < duration_ticks; ++t) {
    if (t > 0) {
      // Innovations are drawn even when rho == 1 so the stream layout is
      // independent of rho.
      for (double& z : state) z = params.rho * z + innovation * rng.normal();
    }
    kernels::convolve_rows({state, nx_, ny_}, taps, tmp);
    kernels::convolve_cols({tmp, nx_, ny_}, taps, smooth);
    const auto [lo, hi] = kernels::min_max(smooth);
    std::span<double> out(values_.data() + t * n, n);
    if (hi > lo) {
      kernels::affine(smooth, lo, 1.0 / (hi - lo), out);
    } else {
      std::fill(out.begin(), out.end(), 0.0);
    }
  }
}

std::span<const double> NoiseGrid::tick_nodes(std::size_t t) const {
  if (t >= duration_) throw FieldError(fmt::format("noise tick {} out of range", t));
  const std::size_t n = nx_ * ny_;
  return {values_.data() + t * n, n};
}

double NoiseGrid::value(Point p, std::size_t t) const {
  if (!arena_.contains(p))
    throw FieldError(fmt::format("noise query ({}, {}) outside arena", p.x, p.y));
  const auto nodes = tick_nodes(t);
  const double gx = p.x / params_.cell_size;
  const double gy = p.y / params_.cell_size;
  const auto ix = std::min(static_cast<std::size_t>(gx), nx_ - 2);
  const auto iy = std::min(static_cast<std::size_t>(gy), ny_ - 2);
  const double fx = gx - static_cast<double>(ix);
  const double fy = gy - static_cast<double>(iy);
  const double v00 = nodes[iy * nx_ + ix];
  const double v10 = nodes[iy * nx_ + ix + 1];
  const double v01 = nodes[(iy + 1) * nx_ + ix];
  const double v11 = nodes[(iy + 1) * nx_ + ix + 1];
  const double top = v00 + (v10 - v00) * fx;
  const double bottom = v01 + (v11 - v01) * fx;
  return std::clamp(top + (bottom - top) * fy, 0.0, 1.0);
}

std::string_view to_string(FieldKind k) {
  switch (k) {
    case FieldKind::spotlight: return "spotlight";
    case FieldKind::wall_follow: return "wall-follow";
    case FieldKind::noisy_blend: return "noisy-blend";
    case FieldKind::zero: return "zero";
    case FieldKind::superposed: return "superposed";
  }
  return "?";
}

FieldKind field_kind_from_string(std::string_view s) {
  for (auto k : {FieldKind::spotlight, FieldKind::wall_follow, FieldKind::noisy_blend,
                 FieldKind::zero, FieldKind::superposed})
    if (to_string(k) == s) return k;
  throw FieldError(fmt::format("unknown field kind '{}'", s));
}

void FieldSpec::validate() const {
  if (duration == 0) throw FieldError("field duration must be positive");
  if (noise_weight < 0.0 || noise_weight > 1.0) throw FieldError("noise weight must lie in [0,1]");
  switch (kind) {
    case FieldKind::spotlight:
    case FieldKind::wall_follow:
    case FieldKind::zero:
      if (noise_weight != 0.0) throw FieldError("only noisy-blend fields carry a noise weight");
      break;
    case FieldKind::noisy_blend: break;
    case FieldKind::superposed:
      if (components.empty()) throw FieldError("superposed field needs components");
      for (const auto& c : components) {
        if (c.duration < duration) throw FieldError("component shorter than superposed field");
        c.validate();
      }
      break;
  }
  if (!(speed > 0.0)) throw FieldError("field speed must be positive");
}

ScoreField ScoreField::build(const FieldSpec& spec, const Arena& arena) {
  spec.validate();
  ScoreField f;
  f.spec_ = spec;
  f.arena_ = arena;
  switch (spec.kind) {
    case FieldKind::spotlight:
      f.path_ = std::make_shared<const SpotlightPath>(
          generate_spotlight_path(spec.seed, arena, spec.speed, spec.duration));
      break;
    case FieldKind::wall_follow:
      f.path_ = std::make_shared<const SpotlightPath>(
          generate_wall_path(spec.seed, arena, spec.speed, spec.duration));
      break;
    case FieldKind::noisy_blend:
      f.path_ = std::make_shared<const SpotlightPath>(
          generate_spotlight_path(spec.seed, arena, spec.speed, spec.duration));
      f.noise_ = std::make_shared<const NoiseGrid>(spec.noise, arena, spec.duration);
      break;
    case FieldKind::zero: break;
    case FieldKind::superposed:
      for (const auto& c : spec.components) f.components_.push_back(build(c, arena));
      break;
  }
  return f;
}

bool ScoreField::graded() const {
  if (spec_.kind == FieldKind::noisy_blend) return spec_.noise_weight > 0.0;
  return std::any_of(components_.begin(), components_.end(),
                     [](const ScoreField& c) { return c.graded(); });
}

double ScoreField::value_unchecked(Point p, std::size_t t) const {
  switch (spec_.kind) {
    case FieldKind::spotlight:
    case FieldKind::wall_follow: return spotlight_value(path_->centers[t], p);
    case FieldKind::noisy_blend: {
      const double w = spec_.noise_weight;
      return (1.0 - w) * spotlight_value(path_->centers[t], p) + w * noise_->value(p, t);
    }
    case FieldKind::zero: return 0.0;
    case FieldKind::superposed: {
      double best = 0.0;
      for (const auto& c : components_) best = std::max(best, c.value_unchecked(p, t));
      return best;
    }
  }
  return 0.0;
}

double ScoreField::value(Point p, std::size_t t) const {
  if (t >= spec_.duration)
    throw FieldError(fmt::format("tick {} past field duration {}", t, spec_.duration));
  if (!arena_.contains(p)) throw FieldError(fmt::format("point ({}, {}) outside arena", p.x, p.y));
  return value_unchecked(p, t);
}

std::vector<Point> ScoreField::centers(std::size_t t) const {
  std::vector<Point> out;
  if (path_ && t < path_->centers.size()) out.push_back(path_->centers[t]);
  for (const auto& c : components_) {
    auto sub = c.centers(t);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

FieldSpec standard_field(FieldKind kind, int field_id, std::size_t duration, double noise_weight,
                         std::uint64_t bank_seed) {
  FieldSpec spec;
  spec.kind = kind;
  spec.duration = duration;
  spec.noise_weight = kind == FieldKind::noisy_blend ? noise_weight : 0.0;
  // Path and noise seeds depend only on the field id, so the two noise
  // conditions share spotlight trajectories field for field.
  spec.seed = derive_seed(bank_seed, {static_cast<std::uint64_t>(field_id), 1});
  spec.noise.seed = derive_seed(bank_seed, {static_cast<std::uint64_t>(field_id), 2});
  return spec;
}

std::string path_to_lines(const SpotlightPath& path) {
  std::string out;
  for (std::size_t t = 0; t < path.centers.size(); ++t)
    out += fmt::format("{}\t{:.3f}\t{:.3f}\n", t, path.centers[t].x, path.centers[t].y);
  return out;
}

void evaluate_batch(const ScoreField& field, std::span<const double> xs, std::span<const double> ys,
                    std::size_t t, std::span<double> out) {
  if (xs.size() != ys.size() || out.size() != xs.size())
    throw FieldError("evaluate_batch: mismatched spans");
  if (t >= field.duration()) throw FieldError("evaluate_batch: tick out of range");
  const auto& spec = field.spec();
  switch (spec.kind) {
    case FieldKind::spotlight:
    case FieldKind::wall_follow:
      kernels::disk_mask(xs, ys, field.path()->centers[t], kSpotlightRadius, out);
      return;
    case FieldKind::noisy_blend: {
      std::vector<double> spot(xs.size());
      std::vector<double> noise(xs.size());
      kernels::disk_mask(xs, ys, field.path()->centers[t], kSpotlightRadius, spot);
      for (std::size_t i = 0; i < xs.size(); ++i) noise[i] = field.noise()->value({xs[i], ys[i]}, t);
      kernels::blend(spot, noise, spec.noise_weight, out);
      return;
    }
    default:
      for (std::size_t i = 0; i < xs.size(); ++i) out[i] = field.value({xs[i], ys[i]}, t);
  }
}

}  // namespace csense
