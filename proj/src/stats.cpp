#include "csense/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "csense/rng.hpp"

namespace csense::stats {

double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(i);
  return v[i] + frac * (v[i + 1] - v[i]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ols_slope needs paired samples");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("ols_slope needs distinct x values");
  return sxy / sxx;
}

BootstrapCI bootstrap(std::size_t n, const std::function<double(std::span<const std::size_t>)>& stat,
                      std::size_t resamples, std::uint64_t seed, double level) {
  if (n == 0) throw std::invalid_argument("bootstrap over zero units");
  if (resamples == 0) throw std::invalid_argument("bootstrap needs at least one resample");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  BootstrapCI ci;
  ci.estimate = stat(idx);
  ci.resamples = resamples;

  Rng rng(seed);
  std::vector<double> draws(resamples);
  for (auto& d : draws) {
    for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
    d = stat(idx);
  }
  const double a = (1.0 - level) / 2.0;
  ci.lo = std::min(quantile(draws, a), ci.estimate);
  ci.hi = std::max(quantile(std::move(draws), 1.0 - a), ci.estimate);
  return ci;
}

BootstrapCI bootstrap_mean(std::span<const double> values, std::size_t resamples, std::uint64_t seed,
                           double level) {
  return bootstrap(
      values.size(),
      [&](std::span<const std::size_t> idx) {
        double s = 0.0;
        for (auto i : idx) s += values[i];
        return s / static_cast<double>(idx.size());
      },
      resamples, seed, level);
}

BootstrapCI bootstrap_median(std::span<const double> values, std::size_t resamples, std::uint64_t seed,
                             double level) {
  std::vector<double> buf(values.size());
  return bootstrap(
      values.size(),
      [&](std::span<const std::size_t> idx) {
        for (std::size_t k = 0; k < idx.size(); ++k) buf[k] = values[idx[k]];
        return median(buf);
      },
      resamples, seed, level);
}

BootstrapCI bootstrap_slope(std::span<const double> x, std::span<const std::vector<double>> groups,
                            std::size_t resamples, std::uint64_t seed, double level) {
  if (x.size() != groups.size()) throw std::invalid_argument("one group per x value required");
  for (const auto& g : groups)
    if (g.empty()) throw std::invalid_argument("empty group in slope bootstrap");
  std::vector<double> means(groups.size());
  for (std::size_t k = 0; k < groups.size(); ++k) means[k] = mean(groups[k]);

  BootstrapCI ci;
  ci.estimate = ols_slope(x, means);
  ci.resamples = resamples;
  Rng rng(seed);
  std::vector<double> draws(resamples);
  for (auto& d : draws) {
    for (std::size_t k = 0; k < groups.size(); ++k) {
      const auto& g = groups[k];
      double s = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) s += g[rng.below(g.size())];
      means[k] = s / static_cast<double>(g.size());
    }
    d = ols_slope(x, means);
  }
  const double a = (1.0 - level) / 2.0;
  ci.lo = std::min(quantile(draws, a), ci.estimate);
  ci.hi = std::max(quantile(std::move(draws), 1.0 - a), ci.estimate);
  return ci;
}

}  // namespace csense::stats
