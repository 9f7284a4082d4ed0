#pragma once
// Data-parallel inner loops behind the score fields and the analysis batch
// evaluators. Every kernel has a scalar reference implementation and, where
// the target supports it, an AVX2 variant chosen once at runtime. Variants
// evaluate each element with the same operation order as the scalar code,
// so results are bit-identical across ISAs (the build disables FP
// contraction to keep it that way).

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>

#include "csense/geometry.hpp"

namespace csense::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// Best ISA the running CPU supports among the variants compiled in.
Isa detected_isa();

/// ISA currently used by the dispatching entry points.
Isa active_isa();

/// Pins dispatch to a specific ISA (tests, benchmarks). Throws
/// std::invalid_argument if the ISA is not available on this machine.
void force_isa(Isa isa);

/// Restores dispatch to detected_isa().
void reset_isa();

struct GridView {
  std::span<const double> data;
  std::size_t width = 0;
  std::size_t height = 0;
};

// Dispatching entry points --------------------------------------------------

/// Horizontal 1-D convolution of a row-major grid, replicate-edge boundary.
/// taps.size() must be odd; the centre tap sits at taps.size()/2.
void convolve_rows(GridView src, std::span<const double> taps, std::span<double> dst);

/// Vertical counterpart of convolve_rows.
void convolve_cols(GridView src, std::span<const double> taps, std::span<double> dst);

/// out[i] = 1 if (xs[i], ys[i]) lies within radius of centre (inclusive), else 0.
void disk_mask(std::span<const double> xs, std::span<const double> ys, Point centre,
               double radius, std::span<double> out);

/// out[i] = (1 - w) * a[i] + w * b[i].
void blend(std::span<const double> a, std::span<const double> b, double w,
           std::span<double> out);

/// Smallest and largest element. Input must be non-empty.
std::pair<double, double> min_max(std::span<const double> v);

/// dst[i] = (src[i] - lo) * scale.
void affine(std::span<const double> src, double lo, double scale, std::span<double> dst);

// Per-ISA implementations ---------------------------------------------------

namespace scalar {
void convolve_rows(GridView src, std::span<const double> taps, std::span<double> dst);
void convolve_cols(GridView src, std::span<const double> taps, std::span<double> dst);
void disk_mask(std::span<const double> xs, std::span<const double> ys, Point centre,
               double radius, std::span<double> out);
void blend(std::span<const double> a, std::span<const double> b, double w,
           std::span<double> out);
std::pair<double, double> min_max(std::span<const double> v);
void affine(std::span<const double> src, double lo, double scale, std::span<double> dst);
}  // namespace scalar

#if defined(CSENSE_HAVE_AVX2)
namespace avx2 {
void convolve_rows(GridView src, std::span<const double> taps, std::span<double> dst);
void convolve_cols(GridView src, std::span<const double> taps, std::span<double> dst);
void disk_mask(std::span<const double> xs, std::span<const double> ys, Point centre,
               double radius, std::span<double> out);
void blend(std::span<const double> a, std::span<const double> b, double w,
           std::span<double> out);
std::pair<double, double> min_max(std::span<const double> v);
void affine(std::span<const double> src, double lo, double scale, std::span<double> dst);
}  // namespace avx2
#endif

}  // namespace csense::kernels
