#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "npe/core/errors.hpp"

namespace npe::validate {

struct UniformDistance {
  double wd = 0.0;
  double tv = 0.0;
  double hellinger = 0.0;
};

inline constexpr int kHistogramBins = 20;

/// Distances of the empirical distribution of `u` to U(0,1). The Wasserstein
/// term is the exact integral of |F_C(x) - x|; TV and Hellinger compare a
/// 20-bin histogram against the flat density.
inline UniformDistance dist_to_uniform(std::span<const double> u) {
  if (u.size() < 2) throw DomainError("need at least two values to compare with U(0,1)");
  std::vector<double> sorted(u.begin(), u.end());
  for (double v : sorted)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("value outside [0, 1]: " + std::to_string(v));
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  // On [a, b] the empirical CDF equals the constant level c.
  auto segment = [](double a, double b, double c) {
    if (b <= a) return 0.0;
    if (c <= a) return 0.5 * ((b - c) * (b - c) - (a - c) * (a - c));
    if (c >= b) return 0.5 * ((c - a) * (c - a) - (c - b) * (c - b));
    return 0.5 * ((c - a) * (c - a) + (b - c) * (b - c));
  };
  UniformDistance d;
  double prev = 0.0;
  for (std::size_t i = 0; i <= sorted.size(); ++i) {
    const double next = i < sorted.size() ? sorted[i] : 1.0;
    d.wd += segment(prev, next, static_cast<double>(i) / n);
    prev = next;
  }

  std::array<double, kHistogramBins> mass{};
  for (double v : sorted) mass[static_cast<std::size_t>(std::min(kHistogramBins - 1, static_cast<int>(v * kHistogramBins)))] += 1.0 / n;
  double bhattacharyya = 0.0;
  for (double m : mass) {
    d.tv += 0.5 * std::abs(m - 1.0 / kHistogramBins);
    bhattacharyya += std::sqrt(m / kHistogramBins);
  }
  d.hellinger = std::sqrt(std::max(0.0, 1.0 - bhattacharyya));
  return d;
}

/// Expected-coverage score of TARP statistics: their Wasserstein distance to U(0,1).
inline double ecp_score(std::span<const double> u) { return dist_to_uniform(u).wd; }

/// Points (level, fraction of u <= level) for levels 0.01, 0.02, ..., 0.99.
inline std::vector<std::pair<double, double>> coverage_curve(std::span<const double> u) {
  std::vector<double> sorted(u.begin(), u.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> curve;
  for (int i = 1; i <= 99; ++i) {
    const double level = i / 100.0;
    const auto below = std::upper_bound(sorted.begin(), sorted.end(), level) - sorted.begin();
    curve.emplace_back(level, static_cast<double>(below) / static_cast<double>(sorted.size()));
  }
  return curve;
}

}  // namespace npe::validate
