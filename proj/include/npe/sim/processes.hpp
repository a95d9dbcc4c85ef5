#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "npe/core/errors.hpp"
#include "npe/core/random.hpp"
#include "npe/core/stats.hpp"

namespace npe::sim {

// ---------------------------------------------------------------------------
// Distribution helpers
// ---------------------------------------------------------------------------

inline Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& alpha, RandomStream& rng) {
  Eigen::VectorXd g(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) g[i] = rng.gamma(alpha[i], 1.0);
  return g / g.sum();
}

/// Multinomial counts via sequential conditional binomials.
inline Eigen::VectorXd sample_multinomial(long trials, const Eigen::VectorXd& p, RandomStream& rng) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(p.size());
  long remaining = trials;
  double mass = 1.0;
  for (Eigen::Index i = 0; i + 1 < p.size() && remaining > 0; ++i) {
    const double q = mass > 0.0 ? std::clamp(p[i] / mass, 0.0, 1.0) : 0.0;
    const long c = rng.binomial(remaining, q);
    counts[i] = static_cast<double>(c);
    remaining -= c;
    mass -= p[i];
  }
  counts[p.size() - 1] += static_cast<double>(remaining);
  return counts;
}

/// Wishart(dof, scale) through the Bartlett decomposition.
inline Eigen::MatrixXd sample_wishart(double dof, const Eigen::MatrixXd& scale, RandomStream& rng) {
  const Eigen::Index p = scale.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success) throw CholeskyError("Wishart scale not positive definite");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    a(i, i) = std::sqrt(rng.gamma(0.5 * (dof - static_cast<double>(i)), 2.0));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const Eigen::MatrixXd la = llt.matrixL() * a;
  return la * la.transpose();
}

inline Eigen::MatrixXd sample_inverse_wishart(double dof, const Eigen::MatrixXd& scale,
                                              RandomStream& rng) {
  const Eigen::MatrixXd w = sample_wishart(dof, scale.inverse(), rng);
  Eigen::MatrixXd s = w.inverse();
  return 0.5 * (s + s.transpose());
}

inline Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                  RandomStream& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw CholeskyError("covariance not positive definite");
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + llt.matrixL() * z;
}

// ---------------------------------------------------------------------------
// g-and-k quantile function
// ---------------------------------------------------------------------------

inline double gk_quantile_from_z(double z, double a, double b, double g, double k, double c = 0.8) {
  return a + b * (1.0 + c * std::tanh(0.5 * g * z)) * std::pow(1.0 + z * z, k) * z;
}

inline double gk_quantile(double u, double a, double b, double g, double k, double c = 0.8) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("g-and-k quantile needs u in (0,1)");
  if (!(b > 0.0)) throw DomainError("g-and-k scale b must be positive");
  if (!(k > -0.5)) throw DomainError("g-and-k kurtosis k must exceed -0.5");
  return gk_quantile_from_z(stats::normal_quantile(u), a, b, g, k, c);
}

// ---------------------------------------------------------------------------
// Fractional Brownian motion
// ---------------------------------------------------------------------------

inline double fbm_covariance(double hurst, double s, double t) {
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
}

inline Eigen::MatrixXd fbm_covariance_matrix(double hurst, const Eigen::VectorXd& times) {
  const Eigen::Index n = times.size();
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) c(i, j) = c(j, i) = fbm_covariance(hurst, times[i], times[j]);
  return c;
}

/// Lower Cholesky factor of the fBM covariance, retrying with growing jitter.
inline Eigen::MatrixXd fbm_cholesky(double hurst, const Eigen::VectorXd& times) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw DomainError("Hurst exponent must lie in (0,1)");
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0) || (i > 0 && !(times[i] > times[i - 1])))
      throw DomainError("fBM times must be positive and strictly increasing");
  }
  Eigen::MatrixXd cov = fbm_covariance_matrix(hurst, times);
  const double scale = cov.diagonal().mean();
  double jitter = 0.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    Eigen::MatrixXd m = cov;
    m.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    jitter = jitter == 0.0 ? 1e-12 * scale : jitter * 100.0;
  }
  throw CholeskyError("fBM covariance is not positive definite (H=" + std::to_string(hurst) + ")");
}

/// Zero-drift, unit-variance-scale fBM path sampled at `times`.
inline Eigen::VectorXd fbm_sample_path(double hurst, const Eigen::VectorXd& times, RandomStream& rng) {
  const Eigen::MatrixXd l = fbm_cholesky(hurst, times);
  Eigen::VectorXd z(times.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return l * z;
}

// ---------------------------------------------------------------------------
// Lotka-Volterra
// ---------------------------------------------------------------------------

struct LvRates {
  double alpha, beta, gamma, delta;
};

inline Eigen::Vector2d lv_rhs(const LvRates& r, const Eigen::Vector2d& s) {
  return {r.alpha * s[0] - r.beta * s[0] * s[1], -r.gamma * s[1] + r.delta * s[0] * s[1]};
}

/// First integral of the predator-prey flow; constant along exact trajectories.
inline double lv_first_integral(const LvRates& r, const Eigen::Vector2d& s) {
  return r.delta * s[0] - r.gamma * std::log(s[0]) + r.beta * s[1] - r.alpha * std::log(s[1]);
}

/// Classical RK4 with `substeps` steps per grid interval. Row i is the state at
/// t_grid[i]; row 0 is x0.
inline Eigen::MatrixXd lv_integrate(const LvRates& r, const Eigen::Vector2d& x0,
                                    const Eigen::VectorXd& t_grid, int substeps = 4) {
  if (!(x0[0] > 0.0 && x0[1] > 0.0)) throw DomainError("initial populations must be positive");
  Eigen::MatrixXd out(t_grid.size(), 2);
  Eigen::Vector2d s = x0;
  out.row(0) = s.transpose();
  for (Eigen::Index i = 1; i < t_grid.size(); ++i) {
    const double h = (t_grid[i] - t_grid[i - 1]) / substeps;
    for (int k = 0; k < substeps; ++k) {
      const Eigen::Vector2d k1 = lv_rhs(r, s);
      const Eigen::Vector2d k2 = lv_rhs(r, s + 0.5 * h * k1);
      const Eigen::Vector2d k3 = lv_rhs(r, s + 0.5 * h * k2);
      const Eigen::Vector2d k4 = lv_rhs(r, s + h * k3);
      s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!s.allFinite()) throw IntegrationError("non-finite state at grid index " + std::to_string(i));
    out.row(i) = s.transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------
// VAR(p) with a Minnesota-style prior
// ---------------------------------------------------------------------------

struct VarCoefficients {
  std::vector<Eigen::MatrixXd> lags;  // Gamma_1 .. Gamma_p, each dims x dims
  Eigen::VectorXd sigma_diag;         // noise variances
};

inline Eigen::MatrixXd var_companion(const std::vector<Eigen::MatrixXd>& lags) {
  const Eigen::Index d = lags.front().rows();
  const Eigen::Index p = static_cast<Eigen::Index>(lags.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d * p, d * p);
  for (Eigen::Index h = 0; h < p; ++h) c.block(0, h * d, d, d) = lags[static_cast<std::size_t>(h)];
  if (p > 1) c.block(d, 0, d * (p - 1), d * (p - 1)).setIdentity();
  return c;
}

inline double var_spectral_radius(const std::vector<Eigen::MatrixXd>& lags) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(var_companion(lags), false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Multiplies every coefficient by `factor` until the companion matrix is
/// stable. Returns the number of shrink steps applied.
inline int var_shrink_to_stationary(std::vector<Eigen::MatrixXd>& lags, double factor = 0.98,
                                    int max_steps = 1000) {
  for (int step = 0; step <= max_steps; ++step) {
    if (var_spectral_radius(lags) < 1.0) return step;
    if (step == max_steps) break;
    for (auto& g : lags) g *= factor;
  }
  throw StationarityError("coefficients not stationary after " + std::to_string(max_steps) +
                          " shrink steps");
}

/// Lag-h entries ~ N(tau/h, theta/h) before shrinkage.
inline std::vector<Eigen::MatrixXd> var_minnesota_draw(double tau, double theta_shrink, int dims,
                                                       int lags, RandomStream& rng) {
  std::vector<Eigen::MatrixXd> out;
  for (int h = 1; h <= lags; ++h) {
    Eigen::MatrixXd g(dims, dims);
    for (int i = 0; i < dims; ++i)
      for (int j = 0; j < dims; ++j) g(i, j) = rng.normal(tau / h, theta_shrink / h);
    out.push_back(std::move(g));
  }
  return out;
}

inline VarCoefficients var_sample_coefficients(double tau, double theta_shrink, int dims, int lags,
                                               RandomStream& rng, double sigma_shape = 2.0,
                                               double sigma_scale = 1.0 / 6.0,
                                               double shrink_factor = 0.98) {
  if (dims < 1 || lags < 1) throw ConfigError("VAR needs dims >= 1 and lags >= 1");
  VarCoefficients c;
  c.lags = var_minnesota_draw(tau, theta_shrink, dims, lags, rng);
  var_shrink_to_stationary(c.lags, shrink_factor);
  c.sigma_diag.resize(dims);
  for (int i = 0; i < dims; ++i) c.sigma_diag[i] = rng.inverse_gamma(sigma_shape, sigma_scale);
  return c;
}

inline Eigen::MatrixXd var_simulate(const VarCoefficients& c, int steps, int burn_in, RandomStream& rng) {
  const auto d = c.sigma_diag.size();
  const int p = static_cast<int>(c.lags.size());
  std::vector<Eigen::VectorXd> hist(static_cast<std::size_t>(p), Eigen::VectorXd::Zero(d));
  Eigen::MatrixXd out(steps, d);
  for (int t = 0; t < burn_in + steps; ++t) {
    Eigen::VectorXd x(d);
    for (Eigen::Index i = 0; i < d; ++i) x[i] = rng.normal(0.0, std::sqrt(c.sigma_diag[i]));
    for (int h = 0; h < p; ++h) x += c.lags[static_cast<std::size_t>(h)] * hist[static_cast<std::size_t>(h)];
    for (int h = p - 1; h > 0; --h) hist[static_cast<std::size_t>(h)] = hist[static_cast<std::size_t>(h - 1)];
    hist[0] = x;
    if (t >= burn_in) out.row(t - burn_in) = x.transpose();
  }
  return out;
}

}  // namespace npe::sim
