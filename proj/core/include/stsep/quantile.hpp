#pragma once

#include <cmath>
#include <vector>

namespace stsep {

// Linear-interpolation empirical quantile at h = (n+1)p (clamped to the
// sample range). Input must be sorted ascending and non-empty.
inline double empirical_quantile(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  double h = (n + 1) * p;
  if (h <= 1.0) return sorted.front();
  if (h >= static_cast<double>(n)) return sorted.back();
  std::size_t i = static_cast<std::size_t>(std::floor(h));
  double frac = h - static_cast<double>(i);
  return sorted[i - 1] + frac * (sorted[i] - sorted[i - 1]);
}

}  // namespace stsep
