#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "npe/core/errors.hpp"

namespace npe {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded pseudo-random source. Every consumer receives its own stream; workers
/// derive independent sub-streams from (run_seed, task_index) so results do not
/// depend on scheduling.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0) : engine_(splitmix64(seed)) {}

  static RandomStream derive(std::uint64_t run_seed, std::uint64_t task_index) {
    return RandomStream(splitmix64(run_seed) ^ splitmix64(~task_index * 0x2545f4914f6cdd1dULL));
  }

  /// Child stream keyed by `index`; does not advance this stream.
  RandomStream child(std::uint64_t index) const {
    std::mt19937_64 copy = engine_;
    return derive(copy(), index);
  }

  std::uint64_t next_u64() { return engine_(); }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

  /// Inclusive integer range.
  long uniform_int(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(engine_); }

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma with shape/scale parameterization.
  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(engine_);
  }

  /// Inverse-gamma with shape/scale (density ∝ x^{-shape-1} e^{-scale/x}).
  double inverse_gamma(double shape, double scale) { return scale / gamma(shape, 1.0); }

  double beta(double a, double b) {
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    return x / (x + y);
  }

  long poisson(double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<long>(mean)(engine_);
  }

  long binomial(long trials, double p) {
    if (trials <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return trials;
    return std::binomial_distribution<long>(trials, p)(engine_);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void restore(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
    if (!is) throw ConfigError("unreadable random stream state");
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace npe
