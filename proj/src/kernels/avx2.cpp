// Compiled with -mavx2. Only reached through dispatch after a CPUID check.
#include <immintrin.h>

#include <algorithm>
#include <cassert>

#include "csense/kernels/kernels.hpp"

namespace csense::kernels::avx2 {

namespace {
inline std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (static_cast<std::size_t>(i) >= n) return n - 1;
  return static_cast<std::size_t>(i);
}

inline double row_tap_scalar(const double* row, std::size_t width, std::size_t x,
                             std::span<const double> taps, std::ptrdiff_t half) {
  double acc = 0.0;
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const auto xi = static_cast<std::ptrdiff_t>(x) + static_cast<std::ptrdiff_t>(k) - half;
    acc += taps[k] * row[clamp_index(xi, width)];
  }
  return acc;
}
}  // namespace

void convolve_rows(GridView src, std::span<const double> taps, std::span<double> dst) {
  const auto half = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto width = static_cast<std::ptrdiff_t>(src.width);
  // Interior outputs x where every tap index x-half..x+half is in range.
  const std::ptrdiff_t lo = half;
  const std::ptrdiff_t hi = width - half;  // exclusive
  for (std::size_t y = 0; y < src.height; ++y) {
    const double* row = src.data.data() + y * src.width;
    double* out = dst.data() + y * src.width;
    std::ptrdiff_t x = 0;
    for (; x < std::min(lo, width); ++x)
      out[x] = row_tap_scalar(row, src.width, static_cast<std::size_t>(x), taps, half);
    for (; x + 4 <= hi; x += 4) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t k = 0; k < taps.size(); ++k) {
        const __m256d w = _mm256_set1_pd(taps[k]);
        const __m256d v = _mm256_loadu_pd(row + x + static_cast<std::ptrdiff_t>(k) - half);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(w, v));
      }
      _mm256_storeu_pd(out + x, acc);
    }
    for (; x < width; ++x)
      out[x] = row_tap_scalar(row, src.width, static_cast<std::size_t>(x), taps, half);
  }
}

void convolve_cols(GridView src, std::span<const double> taps, std::span<double> dst) {
  const auto half = static_cast<std::ptrdiff_t>(taps.size() / 2);
  for (std::size_t y = 0; y < src.height; ++y) {
    double* out = dst.data() + y * src.width;
    std::size_t x = 0;
    for (; x + 4 <= src.width; x += 4) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t k = 0; k < taps.size(); ++k) {
        const auto yi = static_cast<std::ptrdiff_t>(y) + static_cast<std::ptrdiff_t>(k) - half;
        const double* row = src.data.data() + clamp_index(yi, src.height) * src.width;
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(taps[k]), _mm256_loadu_pd(row + x)));
      }
      _mm256_storeu_pd(out + x, acc);
    }
    for (; x < src.width; ++x) {
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
  const __m256d cx = _mm256_set1_pd(centre.x);
  const __m256d cy = _mm256_set1_pd(centre.y);
  const __m256d vr2 = _mm256_set1_pd(r2);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= xs.size(); i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs.data() + i), cx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys.data() + i), cy);
    const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    const __m256d inside = _mm256_cmp_pd(d2, vr2, _CMP_LE_OQ);
    _mm256_storeu_pd(out.data() + i, _mm256_and_pd(inside, one));
  }
  for (; i < xs.size(); ++i) {
    const double dx = xs[i] - centre.x;
    const double dy = ys[i] - centre.y;
    out[i] = (dx * dx + dy * dy <= r2) ? 1.0 : 0.0;
  }
}

void blend(std::span<const double> a, std::span<const double> b, double w,
           std::span<double> out) {
  const double keep = 1.0 - w;
  const __m256d vk = _mm256_set1_pd(keep);
  const __m256d vw = _mm256_set1_pd(w);
  std::size_t i = 0;
  for (; i + 4 <= a.size(); i += 4) {
    const __m256d lhs = _mm256_mul_pd(vk, _mm256_loadu_pd(a.data() + i));
    const __m256d rhs = _mm256_mul_pd(vw, _mm256_loadu_pd(b.data() + i));
    _mm256_storeu_pd(out.data() + i, _mm256_add_pd(lhs, rhs));
  }
  for (; i < a.size(); ++i) out[i] = keep * a[i] + w * b[i];
}

std::pair<double, double> min_max(std::span<const double> v) {
  assert(!v.empty());
  std::size_t i = 0;
  double lo = v[0];
  double hi = v[0];
  if (v.size() >= 4) {
    __m256d vlo = _mm256_loadu_pd(v.data());
    __m256d vhi = vlo;
    for (i = 4; i + 4 <= v.size(); i += 4) {
      const __m256d x = _mm256_loadu_pd(v.data() + i);
      vlo = _mm256_min_pd(vlo, x);
      vhi = _mm256_max_pd(vhi, x);
    }
    alignas(32) double l[4];
    alignas(32) double h[4];
    _mm256_store_pd(l, vlo);
    _mm256_store_pd(h, vhi);
    lo = std::min(std::min(l[0], l[1]), std::min(l[2], l[3]));
    hi = std::max(std::max(h[0], h[1]), std::max(h[2], h[3]));
  }
  for (; i < v.size(); ++i) {
    lo = std::min(lo, v[i]);
    hi = std::max(hi, v[i]);
  }
  return {lo, hi};
}

void affine(std::span<const double> src, double lo, double scale, std::span<double> dst) {
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vs = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= src.size(); i += 4) {
    const __m256d x = _mm256_sub_pd(_mm256_loadu_pd(src.data() + i), vlo);
    _mm256_storeu_pd(dst.data() + i, _mm256_mul_pd(x, vs));
  }
  for (; i < src.size(); ++i) dst[i] = (src[i] - lo) * scale;
}

}  // namespace csense::kernels::avx2
