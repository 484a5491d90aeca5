#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace finbench {

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

// ddof = delta degrees of freedom (1 = sample variance).
inline double variance(std::span<const double> xs, int ddof = 1) {
  const auto n = static_cast<std::ptrdiff_t>(xs.size());
  if (n - ddof <= 0) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(n - ddof);
}

inline double stddev(std::span<const double> xs, int ddof = 1) {
  return std::sqrt(variance(xs, ddof));
}

// Pearson correlation; returns NaN when either side has zero variance.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  if (n < 2 || ys.size() != n) return std::nan("");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace finbench
