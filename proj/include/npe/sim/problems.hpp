#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "npe/core/stats.hpp"
#include "npe/sim/processes.hpp"
#include "npe/sim/spec.hpp"

// Benchmark generative processes. Hyperparameter defaults live in registry.hpp;
// every value read here through hp() can be overridden from a run config.

namespace npe::sim {

namespace detail {

inline Eigen::VectorXd simplex_to_differences(const Eigen::VectorXd& p) {
  const Eigen::Index k = p.size();
  return p.head(k - 1).array() - p[k - 1];
}

/// Inverse of simplex_to_differences: p_K = (1 - sum d) / K, p_i = d_i + p_K.
inline Eigen::VectorXd differences_to_simplex(const Eigen::VectorXd& d) {
  const Eigen::Index k = d.size() + 1;
  const double last = (1.0 - d.sum()) / static_cast<double>(k);
  Eigen::VectorXd p(k);
  p.head(k - 1) = d.array() + last;
  p[k - 1] = last;
  return p;
}

inline std::vector<std::string> indexed_names(const std::string& stem, int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(stem + "_" + std::to_string(i + 1));
  return out;
}

inline Eigen::MatrixXd row(const Eigen::VectorXd& v) { return v.transpose(); }

}  // namespace detail

// --- Sum of cosines --------------------------------------------------------
// theta ~ U(-1,1)^2, X ~ N(f(pi theta), 1), X preprocessed as X / scale.

inline double cosines_mean(double t1, double t2) {
  using std::numbers::pi;
  return std::cos(t1 * pi - t2 * pi) + std::cos(2 * t1 * pi + t2 * pi) + std::cos(3 * t1 * pi - 4 * t2 * pi);
}

class SumOfCosines final : public Simulator {
 public:
  using Simulator::Simulator;
  PriorDraw sample_prior(RandomStream& rng) const override {
    return {Eigen::Vector2d(rng.uniform(-1, 1), rng.uniform(-1, 1)), {}};
  }
  bool in_support(const Eigen::VectorXd& t) const override {
    return t.cwiseAbs().maxCoeff() < 1.0;
  }
  std::vector<std::string> theta_names() const override { return {"theta_1", "theta_2"}; }

 protected:
  Dataset generate(const Eigen::VectorXd& t, int n, RandomStream& rng) const override {
    Dataset x(n, 1);
    const double mu = cosines_mean(t[0], t[1]);
    for (int i = 0; i < n; ++i) x(i, 0) = rng.normal(mu, 1.0);
    return x;
  }
  Dataset transform_data(const Dataset& raw) const override { return raw / hp("scale"); }
};

// --- Witch's hat -----------------------------------------------------------
// theta ~ U(0.1, 0.9)^d; each row is U([0,1]^d) with probability delta, else
// N(theta, sigma^2 I). No preprocessing.

inline Dataset witch_hat_rows(const Eigen::VectorXd& theta, int n, double sigma, double delta,
                              RandomStream& rng) {
  const auto d = theta.size();
  const long n_uniform = rng.binomial(n, delta);
  Dataset x(n, d);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j)
      x(i, j) = i < n_uniform ? rng.uniform() : rng.normal(theta[j], sigma);
  }
  if (n > 1) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    Dataset shuffled(n, d);
    for (int i = 0; i < n; ++i) shuffled.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    return shuffled;
  }
  return x;
}

class WitchHat final : public Simulator {
 public:
  using Simulator::Simulator;
  PriorDraw sample_prior(RandomStream& rng) const override {
    Eigen::VectorXd t(spec().raw_theta_dim);
    for (auto& v : t) v = rng.uniform(0.1, 0.9);
    return {t, {}};
  }
  bool in_support(const Eigen::VectorXd& t) const override {
    return t.minCoeff() >= 0.1 && t.maxCoeff() <= 0.9;
  }
  std::vector<std::string> theta_names() const override {
    return detail::indexed_names("theta", spec().raw_theta_dim);
  }

 protected:
  Dataset generate(const Eigen::VectorXd& t, int n, RandomStream& rng) const override {
    return witch_hat_rows(t, n, hp("sigma"), hp("delta"), rng);
  }
};

// --- Dirichlet-multinomial ---------------------------------------------------
// alpha_k ~ Gamma(shape, scale), theta ~ Dirichlet(alpha), X ~ Multinomial(n_multi, theta).
// theta enters the networks as differences theta_i - theta_K; X as X / n_multi.

class DirichletMultinomial final : public Simulator {
 public:
  using Simulator::Simulator;
  PriorDraw sample_prior(RandomStream& rng) const override {
    const int k = hp_int("K");
    Eigen::VectorXd alpha(k);
    for (auto& a : alpha) a = rng.gamma(hp("alpha_shape"), hp("alpha_scale"));
    return {sample_dirichlet(alpha, rng), alpha};
  }
  bool in_support(const Eigen::VectorXd& t) const override {
    return t.minCoeff() >= 0.0 && std::abs(t.sum() - 1.0) < 1e-9;
  }
  std::vector<std::string> theta_names() const override {
    return detail::indexed_names("p", spec().raw_theta_dim);
  }

 protected:
  Dataset generate(const Eigen::VectorXd& t, int n, RandomStream& rng) const override {
    Dataset x(n, t.size());
    const long trials = std::lround(hp("n_multi"));
    for (int i = 0; i < n; ++i) x.row(i) = sample_multinomial(trials, t, rng).transpose();
    return x;
  }
  Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& raw) const override {
    return detail::simplex_to_differences(raw);
  }
  Eigen::VectorXd from_unconstrained(const Eigen::VectorXd& proc) const override {
    return detail::differences_to_simplex(proc);
  }
  Dataset transform_data(const Dataset& raw) const override { return raw / hp("n_multi"); }
};

// --- Poisson-gamma -----------------------------------------------------------
// theta_k ~ Gamma(alpha, rate beta), X_ik ~ Poisson(theta_k).
// Inputs are log(theta) and log(X + 1).

class PoissonGamma final : public Simulator {
 public:
  using Simulator::Simulator;
  PriorDraw sample_prior(RandomStream& rng) const override {
    Eigen::VectorXd t(spec().raw_theta_dim);
    for (auto& v : t) v = rng.gamma(hp("alpha"), 1.0 / hp("beta"));
    return {t, {}};
  }
  bool in_support(const Eigen::VectorXd& t) const override { return t.minCoeff() > 0.0; }
  std::vector<std::string> theta_names() const override {
    return detail::indexed_names("rate", spec().raw_theta_dim);
  }

 protected:
  Dataset generate(const Eigen::VectorXd& t, int n, RandomStream& rng) const override {
    Dataset x(n, t.size());
    for (int i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < t.size(); ++k) x(i, k) = static_cast<double>(rng.poisson(t[k]));
    return x;
  }
  Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& raw) const override {
    return raw.array().log();
  }
  Eigen::VectorXd from_unconstrained(const Eigen::VectorXd& proc) const override {
    return proc.array().exp();
  }
  Dataset transform_data(const Dataset& raw) const override { return raw.array().log1p(); }
};

// --- Socks ("Karl Broman's laundromat") --------------------------------------
// total_k ~ NegBinom with mean mu and sd sigma for each of K dryers; a shared
// paired-sock proportion ~ 0.75 Beta(a1,b1) + 0.25 Beta(a2,b2). Each X_k is the
// number of draws until the first matching pair. theta and X are divided by mu.
//
// The paired proportion is a nuisance variable: it is drawn once per dataset
// inside generate(), which samples from p(X | totals) with the proportion
// integrated out under its prior.

inline double socks_draws_to_first_match(long total, double prop_paired, RandomStream& rng) {
  const long n_pairs = std::lround(std::floor(total / 2.0) * prop_paired);
  const long n_odd = total - 2 * n_pairs;
  std::vector<long> labels;
  labels.reserve(static_cast<std::size_t>(total));
  for (long i = 0; i < n_pairs; ++i) {
    labels.push_back(i);
    labels.push_back(i);
  }
  for (long i = 0; i < n_odd; ++i) labels.push_back(n_pairs + i);
  std::shuffle(labels.begin(), labels.end(), rng.engine());
  std::vector<char> seen(static_cast<std::size_t>(n_pairs + n_odd), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& s = seen[static_cast<std::size_t>(labels[i])];
    if (s) return static_cast<double>(i + 1);
    s = 1;
  }
  return static_cast<double>(total + 1);  // no pair in the whole basket
}

class Socks final : public Simulator {
 public:
  using Simulator::Simulator;
  PriorDraw sample_prior(RandomStream& rng) const override {
    const double mu = hp("mu");
    const double var = hp("sigma") * hp("sigma");
    // r = mu^2/(sigma^2 - mu), p = 1 - mu/sigma^2 with mean r p / (1 - p) = mu,
    // drawn as a gamma-Poisson mixture.
    const double r = mu * mu / (var - mu);
    const double p = 1.0 - mu / var;
    Eigen::VectorXd t(spec().raw_theta_dim);
    for (auto& v : t) v = static_cast<double>(rng.poisson(rng.gamma(r, p / (1.0 - p))));
    return {t, {}};
  }
  bool in_support(const Eigen::VectorXd& t) const override { return t.minCoeff() >= 0.0; }
  std::vector<std::string> theta_names() const override {
    return detail::indexed_names("socks", spec().raw_theta_dim);
  }

 protected:
  Dataset generate(const Eigen::VectorXd& t, int n, RandomStream& rng) const override {
    Dataset x(n, t.size());
    for (int i = 0; i < n; ++i) {
      const double prop = rng.bernoulli(hp("mixing_coefficient")) ? rng.beta(hp("alpha1"), hp("beta1"))
                                                                 : rng.beta(hp("alpha2"), hp("beta2"));
      for (Eigen::Index k = 0; k < t.size(); ++k)
        x(i, k) = socks_draws_to_first_match(std::lround(t[k]), prop, rng);
    }
    return x;
  }
  Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& raw) const override { return raw / hp("mu"); }
  Eigen::VectorXd from_unconstrained(const Eigen::VectorXd& proc) const override { return proc * hp("mu"); }
  Dataset transform_data(const Dataset& raw) const override { return raw / hp("mu"); }
};

// --- Species sampling ------------------------------------------------------
// p ~ Dirichlet(alpha); per survey N ~ Poisson(lambda_total), true counts
// multinomial given N, detections binomial with per-species probability (species
// 1 mixes an easy and a hard detection regime per survey). One observation row
// holds all surveys' detected counts; X / lambda_total, p as differences.

class SpeciesSampling final : public Simulator {
 public:
  using Simulator::Simulator;
  PriorDraw sample_prior(RandomStream& rng) const override {
    const int k = spec().raw_theta_dim;
    return {sample_dirichlet(Eigen::VectorXd::Constant(k, hp("alpha_dirichlet")), rng), {}};
  }
  bool in_support(const Eigen::VectorXd& t) const override {
    return t.minCoeff() >= 0.0 && std::abs(t.sum() - 1.0) < 1e-9;
  }
  std::vector<std::string> theta_names() const override {
    return detail::indexed_names("p", spec().raw_theta_dim);
  }

 protected:
  Dataset generate(const Eigen::VectorXd& t, int n, RandomStream& rng) const override {
    const int surveys = hp_int("n_surveys");
    const int k = static_cast<int>(t.size());
    Dataset x(n, surveys * k);
    for (int i = 0; i < n; ++i) {
      for (int s = 0; s < surveys; ++s) {
        const long total = rng.poisson(hp("lambda_total"));
        const Eigen::VectorXd counts = sample_multinomial(total, t, rng);
        const double p1 = rng.bernoulli(hp("p_mixture")) ? hp("p_easy") : hp("p_hard");
        const double detect[3] = {p1, hp("p_species2"), hp("p_species3")};
        for (int j = 0; j < k; ++j)
          x(i, s * k + j) = static_cast<double>(rng.binomial(std::lround(counts[j]), detect[j]));
      }
    }
    return x;
  }
  Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& raw) const override {
    return detail::simplex_to_differences(raw);
  }
  Eigen::VectorXd from_unconstrained(const Eigen::VectorXd& proc) const override {
    return detail::differences_to_simplex(proc);
  }
  Dataset transform_data(const Dataset& raw) const override { return raw / hp("lambda_total"); }
};

// --- Normal-gamma ------------------------------------------------------------
// sigma^2 ~ InvGamma(d/2, scale 2/eta), mu ~ N(mu0, sigma / sqrt(kappa)),
// X_i ~ N(mu, sigma). theta_raw = (mu, sigma), preprocessed as (mu, log sigma).

class NormalGamma final : public Simulator {
 public:
  using Simulator::Simulator;
  PriorDraw sample_prior(RandomStream& rng) const override {
    const double var = rng.inverse_gamma(hp("d") / 2.0, 2.0 / hp("eta"));
    const double sigma = std::sqrt(var);
    return {Eigen::Vector2d(rng.normal(hp("mu0"), sigma / std::sqrt(hp("kappa"))), sigma), {}};
  }
  bool in_support(const Eigen::VectorXd& t) const override { return t[1] > 0.0; }
  std::vector<std::string> theta_names() const override { return {"mu", "sigma"}; }

 protected:
  Dataset generate(const Eigen::VectorXd& t, int n, RandomStream& rng) const override {
    Dataset x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = rng.normal(t[0], t[1]);
    return x;
  }
  Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& raw) const override {
    return Eigen::Vector2d(raw[0], std::log(raw[1]));
  }
  Eigen::VectorXd from_unconstrained(const Eigen::VectorXd& proc) const override {
    return Eigen::Vector2d(proc[0], std::exp(proc[1]));
  }
};

// --- Normal-(inverse-)Wishart --------------------------------------------------
// Sigma ~ InvWishart(nu0, Psi0), mu | Sigma ~ N(mu0, Sigma / kappa0), X_i ~ N(mu, Sigma).
// theta_raw = (mu, lower triangle of Sigma row by row); the unconstrained form
// stores mu, log diag(L) and the strictly-lower entries of L = chol(Sigma).

inline Eigen::VectorXd lower_triangle(const Eigen::MatrixXd& m) {
  const Eigen::Index p = m.rows();
  Eigen::VectorXd v(p * (p + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) v[k++] = m(i, j);
  return v;
}

inline Eigen::MatrixXd symmetric_from_lower(const Eigen::VectorXd& v, Eigen::Index p) {
  Eigen::MatrixXd m(p, p);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) m(i, j) = m(j, i) = v[k++];
  return m;
}

class NormalWishart final : public Simulator {
 public:
  using Simulator::Simulator;
  int dim() const { return hp_int("dim"); }

  PriorDraw sample_prior(RandomStream& rng) const override {
    const int p = dim();
    const Eigen::MatrixXd psi = hp("psi0") * Eigen::MatrixXd::Identity(p, p);
    const Eigen::MatrixXd sigma = sample_inverse_wishart(hp("nu0"), psi, rng);
    const Eigen::VectorXd mu = sample_mvn(Eigen::VectorXd::Constant(p, hp("mu0")), sigma / hp("kappa0"), rng);
    Eigen::VectorXd t(spec().raw_theta_dim);
    t << mu, lower_triangle(sigma);
    return {t, {}};
  }
  bool in_support(const Eigen::VectorXd& t) const override {
    const int p = dim();
    Eigen::LLT<Eigen::MatrixXd> llt(symmetric_from_lower(t.tail(t.size() - p), p));
    return llt.info() == Eigen::Success;
  }
  std::vector<std::string> theta_names() const override {
    const int p = dim();
    auto names = detail::indexed_names("mu", p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j <= i; ++j) names.push_back("Sigma_" + std::to_string(i + 1) + std::to_string(j + 1));
    return names;
  }

 protected:
  Dataset generate(const Eigen::VectorXd& t, int n, RandomStream& rng) const override {
    const int p = dim();
    const Eigen::VectorXd mu = t.head(p);
    const Eigen::MatrixXd sigma = symmetric_from_lower(t.tail(t.size() - p), p);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw CholeskyError("normal_wishart: Sigma not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    Dataset x(n, p);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd z(p);
      for (auto& v : z) v = rng.normal();
      x.row(i) = (mu + l * z).transpose();
    }
    return x;
  }
  Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& raw) const override {
    const int p = dim();
    Eigen::LLT<Eigen::MatrixXd> llt(symmetric_from_lower(raw.tail(raw.size() - p), p));
    if (llt.info() != Eigen::Success) throw PreprocessError("normal_wishart: Sigma not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    Eigen::VectorXd out(raw.size());
    out.head(p) = raw.head(p);
    for (int i = 0; i < p; ++i) out[p + i] = std::log(l(i, i));
    Eigen::Index k = 2 * p;
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < i; ++j) out[k++] = l(i, j);
    return out;
  }
  Eigen::VectorXd from_unconstrained(const Eigen::VectorXd& proc) const override {
    const int p = dim();
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < p; ++i) l(i, i) = std::exp(proc[p + i]);
    Eigen::Index k = 2 * p;
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < i; ++j) l(i, j) = proc[k++];
    Eigen::VectorXd out(proc.size());
    out << proc.head(p), lower_triangle(l * l.transpose());
    return out;
  }
};

// --- Univariate g-and-k ----------------------------------------------------------
// a ~ N, b ~ Gamma(shape, scale), g ~ N, k ~ Gamma(shape, scale); X = Q(U; a,b,g,k).
// a, g divided by scale_odds_order; log b, log k divided by scale_even_order;
// X enters as tanh(X / scale_X).

class GAndK final : public Simulator {
 public:
  using Simulator::Simulator;
  PriorDraw sample_prior(RandomStream& rng) const override {
    return {Eigen::Vector4d(rng.normal(hp("a_mean"), hp("a_std")), rng.gamma(hp("b_shape"), hp("b_scale")),
                            rng.normal(hp("g_mean"), hp("g_std")), rng.gamma(hp("k_shape"), hp("k_scale"))),
            {}};
  }
  bool in_support(const Eigen::VectorXd& t) const override { return t[1] > 0.0 && t[3] > 0.0; }
  std::vector<std::string> theta_names() const override { return {"a", "b", "g", "k"}; }

 protected:
  Dataset generate(const Eigen::VectorXd& t, int n, RandomStream& rng) const override {
    Dataset x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = gk_quantile_from_z(rng.normal(), t[0], t[1], t[2], t[3], hp("c"));
    return x;
  }
  Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& raw) const override {
    const double odd = hp("scale_odds_order");
    const double even = hp("scale_even_order");
    return Eigen::Vector4d(raw[0] / odd, std::log(raw[1]) / even, raw[2] / odd, std::log(raw[3]) / even);
  }
  Eigen::VectorXd from_unconstrained(const Eigen::VectorXd& proc) const override {
    const double odd = hp("scale_odds_order");
    const double even = hp("scale_even_order");
    return Eigen::Vector4d(proc[0] * odd, std::exp(proc[1] * even), proc[2] * odd, std::exp(proc[3] * even));
  }
  Dataset transform_data(const Dataset& raw) const override {
    return (raw.array() / hp("scale_x")).tanh();
  }
};

// --- Lotka-Volterra ------------------------------------------------------------
// Rates from uniform boxes, observation noise N(0, R) with Gamma-distributed
// standard deviations and a uniform correlation, added after integration.

class LotkaVolterra final : public Simulator {
 public:
  using Simulator::Simulator;
  PriorDraw sample_prior(RandomStream& rng) const override {
    Eigen::VectorXd t(7);
    t << rng.uniform(hp("alpha_min"), hp("alpha_max")), rng.uniform(hp("beta_min"), hp("beta_max")),
        rng.uniform(hp("gamma_min"), hp("gamma_max")), rng.uniform(hp("delta_min"), hp("delta_max")),
        rng.gamma(hp("sigma_shape"), hp("sigma_scale")), rng.gamma(hp("sigma_shape"), hp("sigma_scale")),
        rng.uniform(hp("rho_min"), hp("rho_max"));
    return {t, {}};
  }
  bool in_support(const Eigen::VectorXd& t) const override {
    return t.head(6).minCoeff() > 0.0 && std::abs(t[6]) < 1.0;
  }
  std::vector<std::string> theta_names() const override {
    return {"alpha", "beta", "gamma", "delta", "sigma_r1", "sigma_r2", "rho_r"};
  }

 protected:
  Dataset generate(const Eigen::VectorXd& t, int n, RandomStream& rng) const override {
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(n, 0.0, hp("dt") * (n - 1));
    const LvRates rates{t[0], t[1], t[2], t[3]};
    Dataset x = n > 1 ? lv_integrate(rates, Eigen::Vector2d(hp("x0_prey"), hp("x0_predator")), grid)
                      : Dataset(Eigen::RowVector2d(hp("x0_prey"), hp("x0_predator")));
    const double s1 = t[4], s2 = t[5], rho = t[6];
    for (int i = 0; i < n; ++i) {
      const double z1 = rng.normal();
      const double z2 = rng.normal();
      x(i, 0) += s1 * z1;
      x(i, 1) += s2 * (rho * z1 + std::sqrt(1.0 - rho * rho) * z2);
    }
    return x;
  }
};

// --- Fractional Brownian motion with cosine drift -------------------------------
// theta = (hurst, tau2, amplitude, phase, period);
// X_t = sqrt(tau2) B_H(t) + amplitude cos(2 pi t / period + phase), t = dt, 2 dt, ...
// Unconstrained form: logit(hurst), log tau2, log amplitude, tan((phase - pi)/2), period.

class FractionalBm final : public Simulator {
 public:
  using Simulator::Simulator;
  PriorDraw sample_prior(RandomStream& rng) const override {
    Eigen::VectorXd t(5);
    t << rng.beta(hp("hurst_alpha"), hp("hurst_beta")), rng.gamma(hp("tau2_alpha"), 1.0 / hp("tau2_beta")),
        rng.gamma(hp("amplitude_alpha"), 1.0 / hp("amplitude_beta")), rng.uniform(hp("phase_min"), hp("phase_max")),
        rng.uniform(hp("period_min"), hp("period_max"));
    return {t, {}};
  }
  bool in_support(const Eigen::VectorXd& t) const override {
    return t[0] > 0.0 && t[0] < 1.0 && t[1] > 0.0 && t[2] > 0.0 && t[3] > 0.0 &&
           t[3] < 2.0 * std::numbers::pi && t[4] > 0.0;
  }
  std::vector<std::string> theta_names() const override {
    return {"hurst", "tau2", "amplitude", "phase", "period"};
  }

 protected:
  Dataset generate(const Eigen::VectorXd& t, int n, RandomStream& rng) const override {
    const double dt = hp("dt");
    const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(n, dt, dt * n);
    // Very rough paths (H near 0) or very smooth ones (H near 1) are numerically
    // delicate; the prior is Beta, so clamp only for the factorization.
    const double h = std::clamp(t[0], 1e-4, 1.0 - 1e-4);
    const Eigen::VectorXd path = fbm_sample_path(h, times, rng);
    Dataset x(n, 1);
    for (int i = 0; i < n; ++i)
      x(i, 0) = std::sqrt(t[1]) * path[i] +
                t[2] * std::cos(2.0 * std::numbers::pi * times[i] / t[4] + t[3]);
    return x;
  }
  Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& raw) const override {
    Eigen::VectorXd out(5);
    out << stats::logit(raw[0]), std::log(raw[1]), std::log(raw[2]),
        std::tan(0.5 * (raw[3] - std::numbers::pi)), raw[4];
    return out;
  }
  Eigen::VectorXd from_unconstrained(const Eigen::VectorXd& proc) const override {
    Eigen::VectorXd out(5);
    out << stats::sigmoid(proc[0]), std::exp(proc[1]), std::exp(proc[2]),
        2.0 * std::atan(proc[3]) + std::numbers::pi, proc[4];
    return out;
  }
};

// --- Stochastic volatility -------------------------------------------------------
// h_t = mu + phi (h_{t-1} - mu) + sigma_eta eta_t, X_t = exp(h_t / 2) eps_t, with
// h_0 drawn from the stationary AR(1) law. No preprocessing.

class StochasticVolatility final : public Simulator {
 public:
  using Simulator::Simulator;
  PriorDraw sample_prior(RandomStream& rng) const override {
    return {Eigen::Vector3d(rng.normal(hp("mu_mean"), hp("mu_std")), rng.uniform(hp("phi_min"), hp("phi_max")),
                            rng.uniform(hp("sigma_min"), hp("sigma_max"))),
            {}};
  }
  bool in_support(const Eigen::VectorXd& t) const override {
    return std::abs(t[1]) < 1.0 && t[2] > 0.0;
  }
  std::vector<std::string> theta_names() const override { return {"mu", "phi", "sigma_eta"}; }

 protected:
  Dataset generate(const Eigen::VectorXd& t, int n, RandomStream& rng) const override {
    const double mu = t[0], phi = t[1], s = t[2];
    double h = rng.normal(mu, s / std::sqrt(1.0 - phi * phi));
    Dataset x(n, 1);
    for (int i = 0; i < n; ++i) {
      h = mu + phi * (h - mu) + s * rng.normal();
      x(i, 0) = std::exp(0.5 * h) * rng.normal();
    }
    return x;
  }
};

// --- Markov-switching factor model -------------------------------------------------
// Two regimes with stay probabilities p1, p2; latent random-walk factor x_t with
// step sd sigma_x; y_t ~ N(beta_{regime} x_t, sigma_y).
// Unconstrained form: beta1, beta2, log sigma_y, log sigma_x, logit(p1)/s, logit(p2)/s.

class MarkovSwitching final : public Simulator {
 public:
  using Simulator::Simulator;
  PriorDraw sample_prior(RandomStream& rng) const override {
    const double sy = rng.gamma(hp("sigma_y_shape"), hp("sigma_y_scale"));
    const double sx = rng.gamma(hp("sigma_x_shape"), hp("sigma_x_scale"));
    Eigen::VectorXd t(6);
    t << rng.normal(hp("beta1_mean"), hp("beta1_tau") * sy), rng.normal(hp("beta2_mean"), hp("beta2_tau") * sy), sy,
        sx, rng.beta(hp("p1_a"), hp("p1_b")), rng.beta(hp("p2_a"), hp("p2_b"));
    return {t, {}};
  }
  bool in_support(const Eigen::VectorXd& t) const override {
    return t[2] > 0.0 && t[3] > 0.0 && t[4] > 0.0 && t[4] < 1.0 && t[5] > 0.0 && t[5] < 1.0;
  }
  std::vector<std::string> theta_names() const override {
    return {"beta1", "beta2", "sigma_y", "sigma_x", "p1", "p2"};
  }

 protected:
  Dataset generate(const Eigen::VectorXd& t, int n, RandomStream& rng) const override {
    int regime = rng.bernoulli(0.5) ? 0 : 1;
    double factor = 0.0;
    Dataset x(n, 1);
    for (int i = 0; i < n; ++i) {
      if (i > 0 && !rng.bernoulli(regime == 0 ? t[4] : t[5])) regime = 1 - regime;
      factor += t[3] * rng.normal();
      x(i, 0) = rng.normal(t[regime] * factor, t[2]);
    }
    return x;
  }
  Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& raw) const override {
    const double s = hp("scale_factor");
    Eigen::VectorXd out(6);
    out << raw[0], raw[1], std::log(raw[2]), std::log(raw[3]), stats::logit(raw[4]) / s, stats::logit(raw[5]) / s;
    return out;
  }
  Eigen::VectorXd from_unconstrained(const Eigen::VectorXd& proc) const override {
    const double s = hp("scale_factor");
    Eigen::VectorXd out(6);
    out << proc[0], proc[1], std::exp(proc[2]), std::exp(proc[3]), stats::sigmoid(proc[4] * s),
        stats::sigmoid(proc[5] * s);
    return out;
  }
};

// --- VAR(p) ------------------------------------------------------------------
// theta_raw = (Gamma_1 .. Gamma_p row-major, diag Sigma). Sigma enters as
// log(Sigma) / scale_sigma, X as X / scale_X.

class VectorAutoregression final : public Simulator {
 public:
  using Simulator::Simulator;
  int dims() const { return hp_int("dims"); }
  int lags() const { return hp_int("lags"); }

  VarCoefficients unpack(const Eigen::VectorXd& t) const {
    const int d = dims();
    VarCoefficients c;
    for (int h = 0; h < lags(); ++h) {
      Eigen::MatrixXd g(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g(i, j) = t[h * d * d + i * d + j];
      c.lags.push_back(g);
    }
    c.sigma_diag = t.tail(d);
    return c;
  }

  PriorDraw sample_prior(RandomStream& rng) const override {
    const int d = dims();
    const VarCoefficients c = var_sample_coefficients(hp("tau"), hp("theta"), d, lags(), rng, hp("sigma_shape"),
                                                      hp("sigma_scale"), hp("shrink_factor"));
    Eigen::VectorXd t(spec().raw_theta_dim);
    Eigen::Index k = 0;
    for (const auto& g : c.lags)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) t[k++] = g(i, j);
    t.tail(d) = c.sigma_diag;
    return {t, {}};
  }
  bool in_support(const Eigen::VectorXd& t) const override {
    const VarCoefficients c = unpack(t);
    return c.sigma_diag.minCoeff() > 0.0 && var_spectral_radius(c.lags) < 1.0;
  }
  std::vector<std::string> theta_names() const override {
    std::vector<std::string> names;
    const int d = dims();
    for (int h = 1; h <= lags(); ++h)
      for (int i = 1; i <= d; ++i)
        for (int j = 1; j <= d; ++j)
          names.push_back("Gamma" + std::to_string(h) + "_" + std::to_string(i) + std::to_string(j));
    for (int i = 1; i <= d; ++i) names.push_back("Sigma_" + std::to_string(i));
    return names;
  }

 protected:
  Dataset generate(const Eigen::VectorXd& t, int n, RandomStream& rng) const override {
    return var_simulate(unpack(t), n, hp_int("burn_in"), rng);
  }
  Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& raw) const override {
    Eigen::VectorXd out = raw;
    const int d = dims();
    out.tail(d) = raw.tail(d).array().log() / hp("scale_sigma");
    return out;
  }
  Eigen::VectorXd from_unconstrained(const Eigen::VectorXd& proc) const override {
    Eigen::VectorXd out = proc;
    const int d = dims();
    out.tail(d) = (proc.tail(d).array() * hp("scale_sigma")).exp();
    return out;
  }
  Dataset transform_data(const Dataset& raw) const override { return raw / hp("scale_x"); }
};

// --- Gaussian toy (test fixture, not part of the benchmark table) -------------------
// theta ~ N(0, I_P), one observation X = theta + obs_std * eps.

class GaussianToy final : public Simulator {
 public:
  using Simulator::Simulator;
  PriorDraw sample_prior(RandomStream& rng) const override {
    Eigen::VectorXd t(spec().raw_theta_dim);
    for (auto& v : t) v = rng.normal();
    return {t, {}};
  }
  bool in_support(const Eigen::VectorXd&) const override { return true; }
  std::vector<std::string> theta_names() const override {
    return detail::indexed_names("theta", spec().raw_theta_dim);
  }

 protected:
  Dataset generate(const Eigen::VectorXd& t, int n, RandomStream& rng) const override {
    Dataset x(n, t.size());
    for (int i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < t.size(); ++j) x(i, j) = t[j] + hp("obs_std") * rng.normal();
    return x;
  }
};

}  // namespace npe::sim
