#pragma once

#include <cmath>
#include <cstdint>

namespace csense {

/// Simulated time quantum. Everything in the engine advances in whole ticks.
inline constexpr double kTickSeconds = 0.125;
inline constexpr int kTicksPerSecond = 8;

inline constexpr double kSlowSpeed = 17.0;  // px/s
inline constexpr double kFastSpeed = 57.0;  // px/s
inline constexpr double kSlowStep = kSlowSpeed * kTickSeconds;  // 2.125 px
inline constexpr double kFastStep = kFastSpeed * kTickSeconds;  // 7.125 px

inline constexpr double kSpotlightDiameter = 50.0;
inline constexpr double kSpotlightRadius = kSpotlightDiameter / 2.0;

inline constexpr double kPi = 3.14159265358979323846;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

inline double distance_sq(Point a, Point b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

/// Distance from p to the segment [a, b].
inline double segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  if (len2 == 0.0) return distance(p, a);
  double t = ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2;
  t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  return distance(p, Point{a.x + t * vx, a.y + t * vy});
}

/// Playing area in screen coordinates: x grows right, y grows down.
struct Arena {
  double width = 480.0;
  double height = 285.0;

  bool contains(Point p) const {
    return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height;
  }
  double area() const { return width * height; }

  friend bool operator==(const Arena&, const Arena&) = default;
};

/// Wraps an angle in degrees into (-180, 180].
inline double wrap_degrees(double deg) {
  double d = std::fmod(deg, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}

inline double degrees_toward(Point from, Point to) {
  return std::atan2(to.y - from.y, to.x - from.x) * 180.0 / kPi;
}

/// Rounds to the 1/1000 px grid used by the replay log.
inline double quantize_milli(double v) { return std::round(v * 1000.0) / 1000.0; }

}  // namespace csense
