#include <algorithm>
#include <cassert>

#include "csense/kernels/kernels.hpp"

namespace csense::kernels::scalar {

namespace {
inline std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (static_cast<std::size_t>(i) >= n) return n - 1;
  return static_cast<std::size_t>(i);
}
}  // namespace

void convolve_rows(GridView src, std::span<const double> taps, std::span<double> dst) {
  const auto half = static_cast<std::ptrdiff_t>(taps.size() / 2);
  for (std::size_t y = 0; y < src.height; ++y) {
    const double* row = src.data.data() + y * src.width;
    double* out = dst.data() + y * src.width;
    for (std::size_t x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < taps.size(); ++k) {
        const auto xi = static_cast<std::ptrdiff_t>(x) + static_cast<std::ptrdiff_t>(k) - half;
        acc += taps[k] * row[clamp_index(xi, src.width)];
      }
      out[x] = acc;
    }
  }
}

void convolve_cols(GridView src, std::span<const double> taps, std::span<double> dst) {
  const auto half = static_cast<std::ptrdiff_t>(taps.size() / 2);
  for (std::size_t y = 0; y < src.height; ++y) {
    double* out = dst.data() + y * src.width;
    for (std::size_t x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < taps.size(); ++k) {
        const auto yi = static_cast<std::ptrdiff_t>(y) + static_cast<std::ptrdiff_t>(k) - half;
        acc += taps[k] * src.data[clamp_index(yi, src.height) * src.width + x];
      }
      out[x] = acc;
    }
  }
}

void disk_mask(std::span<const double> xs, std::span<const double> ys, Point centre,
               double radius, std::span<double> out) {
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - centre.x;
    const double dy = ys[i] - centre.y;
    out[i] = (dx * dx + dy * dy <= r2) ? 1.0 : 0.0;
  }
}

void blend(std::span<const double> a, std::span<const double> b, double w,
           std::span<double> out) {
  const double keep = 1.0 - w;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = keep * a[i] + w * b[i];
}

std::pair<double, double> min_max(std::span<const double> v) {
  assert(!v.empty());
  double lo = v[0];
  double hi = v[0];
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return {lo, hi};
}

void affine(std::span<const double> src, double lo, double scale, std::span<double> dst) {
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] - lo) * scale;
}

}  // namespace csense::kernels::scalar
