#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "npe/core/errors.hpp"
#include "npe/core/random.hpp"

namespace npe::diffusion {

struct EdmConfig {
  double sigma_data = 0.5;
  double sigma_min = 0.002;
  double sigma_max = 80.0;
  double rho = 7.0;
  int n_steps = 18;
  double p_mean = -1.2;
  double p_std = 1.2;
  // c_in = 1/sqrt(sigma^2 + sigma_data^2) when true, 1/(sigma^2 + sigma_data^2) otherwise.
  bool sqrt_c_in = true;
  // Initial Euler state drawn with standard deviation sigma_max when true, 1 otherwise.
  bool scaled_init = true;

  void validate() const {
    if (!(sigma_data > 0)) throw ConfigError("sigma_data must be positive");
    if (!(sigma_min > 0 && sigma_min < sigma_max)) throw ConfigError("need 0 < sigma_min < sigma_max");
    if (!(rho > 0)) throw ConfigError("rho must be positive");
    if (n_steps < 2) throw ConfigError("n_steps must be at least 2");
    if (!(p_std > 0)) throw ConfigError("p_std must be positive");
  }
};

/// n_steps rho-warped noise levels from sigma_max down to sigma_min, then 0.
inline std::vector<double> sigma_schedule(const EdmConfig& cfg) {
  cfg.validate();
  const double hi = std::pow(cfg.sigma_max, 1.0 / cfg.rho);
  const double lo = std::pow(cfg.sigma_min, 1.0 / cfg.rho);
  std::vector<double> s(static_cast<std::size_t>(cfg.n_steps) + 1, 0.0);
  for (int i = 0; i < cfg.n_steps; ++i) {
    const double frac = static_cast<double>(i) / (cfg.n_steps - 1);
    s[static_cast<std::size_t>(i)] = std::pow(hi + frac * (lo - hi), cfg.rho);
  }
  s.front() = cfg.sigma_max;
  s[static_cast<std::size_t>(cfg.n_steps) - 1] = cfg.sigma_min;
  return s;
}

struct Preconditioning {
  double c_skip, c_out, c_in, c_noise;
};

/// c_noise is -inf at sigma = 0; the network is never evaluated there.
inline Preconditioning precondition_coeffs(double sigma, double sigma_data, bool sqrt_c_in = true) {
  if (!(sigma >= 0)) throw DomainError("noise level must be non-negative, got " + std::to_string(sigma));
  const double total = sigma * sigma + sigma_data * sigma_data;
  return {sigma_data * sigma_data / total, sigma * sigma_data / std::sqrt(total),
          sqrt_c_in ? 1.0 / std::sqrt(total) : 1.0 / total, 0.25 * std::log(sigma)};
}

inline Preconditioning precondition_coeffs(double sigma, const EdmConfig& cfg) {
  return precondition_coeffs(sigma, cfg.sigma_data, cfg.sqrt_c_in);
}

/// Loss weight 1 / c_out^2.
inline double loss_weight(double sigma, double sigma_data) {
  return (sigma * sigma + sigma_data * sigma_data) / (sigma * sigma * sigma_data * sigma_data);
}

/// Log-normal training noise level.
inline double sample_training_sigma(const EdmConfig& cfg, RandomStream& rng) {
  return std::exp(rng.normal(cfg.p_mean, cfg.p_std));
}

/// Maps (theta_t rows, sigma) to denoised rows of the same shape.
using DenoiseFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& theta_t, double sigma)>;

/// Deterministic Euler integration of the probability-flow ODE over the
/// schedule. Returns `count` x `dim`; the last step lands on the denoiser output.
inline Eigen::MatrixXd euler_sample(const EdmConfig& cfg, const DenoiseFn& denoise, int count, int dim,
                                    RandomStream& rng) {
  const auto sigmas = sigma_schedule(cfg);
  const double init_sd = cfg.scaled_init ? cfg.sigma_max : 1.0;
  Eigen::MatrixXd x(count, dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = init_sd * rng.normal();
  for (std::size_t i = 0; i + 1 < sigmas.size(); ++i) {
    const double s = sigmas[i], next = sigmas[i + 1];
    Eigen::MatrixXd x0 = denoise(x, s);
    if (next == 0.0) {
      x = std::move(x0);
    } else {
      x -= ((s - next) / s) * (x - x0);
    }
    if (!x.allFinite()) throw SamplingDiverged("non-finite state after Euler step " + std::to_string(i));
  }
  return x;
}

}  // namespace npe::diffusion
