// Runtime selection of kernel variants. No intrinsics in this file.
#include <atomic>
#include <stdexcept>

#include "csense/kernels/kernels.hpp"

namespace csense::kernels {

namespace {

Isa probe() {
#if defined(CSENSE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) return Isa::avx2;
#endif
  return Isa::scalar;
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{detected_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

Isa detected_isa() {
  static const Isa isa = probe();
  return isa;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (isa == Isa::avx2 && detected_isa() != Isa::avx2)
    throw std::invalid_argument("avx2 kernels not available on this machine");
  active().store(isa, std::memory_order_relaxed);
}

void reset_isa() { active().store(detected_isa(), std::memory_order_relaxed); }

#if defined(CSENSE_HAVE_AVX2)
#define CSENSE_DISPATCH(fn, ...)                                  \
  do {                                                            \
    if (active_isa() == Isa::avx2) return avx2::fn(__VA_ARGS__);  \
    return scalar::fn(__VA_ARGS__);                               \
  } while (0)
#else
#define CSENSE_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

void convolve_rows(GridView src, std::span<const double> taps, std::span<double> dst) {
  CSENSE_DISPATCH(convolve_rows, src, taps, dst);
}

void convolve_cols(GridView src, std::span<const double> taps, std::span<double> dst) {
  CSENSE_DISPATCH(convolve_cols, src, taps, dst);
}

void disk_mask(std::span<const double> xs, std::span<const double> ys, Point centre,
               double radius, std::span<double> out) {
  CSENSE_DISPATCH(disk_mask, xs, ys, centre, radius, out);
}

void blend(std::span<const double> a, std::span<const double> b, double w,
           std::span<double> out) {
  CSENSE_DISPATCH(blend, a, b, w, out);
}

std::pair<double, double> min_max(std::span<const double> v) { CSENSE_DISPATCH(min_max, v); }

void affine(std::span<const double> src, double lo, double scale, std::span<double> dst) {
  CSENSE_DISPATCH(affine, src, lo, scale, dst);
}

#undef CSENSE_DISPATCH

}  // namespace csense::kernels
