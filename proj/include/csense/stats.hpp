#pragma once
// Descriptive statistics and percentile bootstrap used by the harness and the
// analysis pipeline. Resampling is driven by the artifact's own RNG so every
// interval is reproducible from its seed.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace csense::stats {

struct BootstrapCI {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t resamples = 0;

  bool contains(double v) const { return lo <= v && v <= hi; }
  bool overlaps(const BootstrapCI& o) const { return lo <= o.hi && o.lo <= hi; }
};

inline constexpr std::size_t kDefaultResamples = 10000;

double mean(std::span<const double> v);
double median(std::vector<double> v);
/// Linear-interpolated quantile (q in [0,1]) of unsorted data.
double quantile(std::vector<double> v, double q);

/// OLS slope of y on x. Requires at least two distinct x values.
double ols_slope(std::span<const double> x, std::span<const double> y);

/// Percentile bootstrap of an arbitrary statistic over `n` resampling units.
/// `stat` receives the resampled unit indices (with repetition).
BootstrapCI bootstrap(std::size_t n, const std::function<double(std::span<const std::size_t>)>& stat,
                      std::size_t resamples, std::uint64_t seed, double level = 0.95);

BootstrapCI bootstrap_mean(std::span<const double> values, std::size_t resamples, std::uint64_t seed,
                           double level = 0.95);
BootstrapCI bootstrap_median(std::span<const double> values, std::size_t resamples, std::uint64_t seed,
                             double level = 0.95);

/// Slope of the group means against x, resampling units within each group
/// independently (stratified bootstrap).
BootstrapCI bootstrap_slope(std::span<const double> x, std::span<const std::vector<double>> groups,
                            std::size_t resamples, std::uint64_t seed, double level = 0.95);

}  // namespace csense::stats
