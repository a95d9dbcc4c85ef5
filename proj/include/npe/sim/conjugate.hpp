#pragma once

#include <Eigen/Dense>
#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <map>
#include <optional>
#include <string>

#include "npe/sim/processes.hpp"
#include "npe/sim/registry.hpp"

namespace npe::sim {

enum class ConjugateFamily { dirichlet, normal_inv_gamma, gamma, normal_inv_wishart, normal };

/// Exact posterior for a conjugate benchmark. Draws and marginal CDFs are in
/// natural (raw) units, matching the layout of `Simulator::sample_prior`.
class ConjugatePosterior {
 public:
  ConjugatePosterior(ConjugateFamily family, std::map<std::string, Eigen::MatrixXd> params)
      : family_(family), params_(std::move(params)) {
    check();
  }

  ConjugateFamily family() const { return family_; }
  const Eigen::MatrixXd& param(const std::string& key) const {
    auto it = params_.find(key);
    if (it == params_.end()) throw ConfigError("conjugate posterior has no parameter " + key);
    return it->second;
  }

  Eigen::VectorXd sample(RandomStream& rng) const {
    switch (family_) {
      case ConjugateFamily::dirichlet:
        return sample_dirichlet(param("alpha").col(0), rng);
      case ConjugateFamily::gamma: {
        const Eigen::VectorXd shape = param("shape").col(0);
        const Eigen::VectorXd rate = param("rate").col(0);
        Eigen::VectorXd t(shape.size());
        for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = rng.gamma(shape[i], 1.0 / rate[i]);
        return t;
      }
      case ConjugateFamily::normal_inv_gamma: {
        const double var = rng.inverse_gamma(scalar("a"), scalar("b"));
        const double sigma = std::sqrt(var);
        return Eigen::Vector2d(rng.normal(scalar("mu"), sigma / std::sqrt(scalar("kappa"))), sigma);
      }
      case ConjugateFamily::normal_inv_wishart: {
        const Eigen::MatrixXd sigma = sample_inverse_wishart(scalar("nu"), param("psi"), rng);
        const Eigen::VectorXd mu = sample_mvn(param("mu").col(0), sigma / scalar("kappa"), rng);
        Eigen::VectorXd t(mu.size() + mu.size() * (mu.size() + 1) / 2);
        t << mu, lower_triangle(sigma);
        return t;
      }
      case ConjugateFamily::normal: {
        const Eigen::VectorXd mean = param("mean").col(0);
        const Eigen::VectorXd sd = param("sd").col(0);
        Eigen::VectorXd t(mean.size());
        for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = rng.normal(mean[i], sd[i]);
        return t;
      }
    }
    return {};
  }

  /// CDF of raw coordinate j at x, or nullopt when that marginal has no closed
  /// form (off-diagonal covariance entries).
  std::optional<double> marginal_cdf(int j, double x) const {
    namespace bm = boost::math;
    switch (family_) {
      case ConjugateFamily::dirichlet: {
        const Eigen::VectorXd a = param("alpha").col(0);
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return 1.0;
        return bm::cdf(bm::beta_distribution<double>(a[j], a.sum() - a[j]), x);
      }
      case ConjugateFamily::gamma: {
        if (x <= 0.0) return 0.0;
        return bm::gamma_p(param("shape")(j, 0), param("rate")(j, 0) * x);
      }
      case ConjugateFamily::normal_inv_gamma: {
        const double a = scalar("a"), b = scalar("b");
        if (j == 0) {
          const double scale = std::sqrt(b / (a * scalar("kappa")));
          return bm::cdf(bm::students_t_distribution<double>(2.0 * a), (x - scalar("mu")) / scale);
        }
        if (x <= 0.0) return 0.0;
        return bm::gamma_q(a, b / (x * x));  // P(sigma^2 <= x^2)
      }
      case ConjugateFamily::normal_inv_wishart: {
        const Eigen::MatrixXd& psi = param("psi");
        const auto p = psi.rows();
        const double nu = scalar("nu");
        if (j < p) {
          const double df = nu - static_cast<double>(p) + 1.0;
          const double scale = std::sqrt(psi(j, j) / (scalar("kappa") * df));
          return bm::cdf(bm::students_t_distribution<double>(df), (x - param("mu")(j, 0)) / scale);
        }
        // Diagonal entries of an inverse-Wishart matrix are inverse-gamma.
        Eigen::Index k = p;
        for (Eigen::Index r = 0; r < p; ++r) {
          for (Eigen::Index c = 0; c <= r; ++c, ++k) {
            if (k != j) continue;
            if (r != c) return std::nullopt;
            if (x <= 0.0) return 0.0;
            return bm::gamma_q((nu - static_cast<double>(p) + 1.0) / 2.0, psi(r, r) / (2.0 * x));
          }
        }
        throw ShapeError("normal_inv_wishart marginal index out of range");
      }
      case ConjugateFamily::normal:
        return stats::normal_cdf((x - param("mean")(j, 0)) / param("sd")(j, 0));
    }
    return std::nullopt;
  }

 private:
  double scalar(const std::string& key) const { return param(key)(0, 0); }

  void check() const {
    switch (family_) {
      case ConjugateFamily::dirichlet:
        if (param("alpha").minCoeff() <= 0.0) throw DomainError("Dirichlet concentration must be positive");
        break;
      case ConjugateFamily::gamma:
        if (param("shape").minCoeff() <= 0.0 || param("rate").minCoeff() <= 0.0)
          throw DomainError("gamma parameters must be positive");
        break;
      case ConjugateFamily::normal_inv_gamma:
        if (scalar("a") <= 0.0 || scalar("b") <= 0.0 || scalar("kappa") <= 0.0)
          throw DomainError("normal-inverse-gamma parameters must be positive");
        break;
      case ConjugateFamily::normal_inv_wishart: {
        const auto p = static_cast<double>(param("psi").rows());
        if (scalar("nu") <= p - 1.0) throw DomainError("Wishart degrees of freedom must exceed dim - 1");
        if (Eigen::LLT<Eigen::MatrixXd>(param("psi")).info() != Eigen::Success)
          throw DomainError("Wishart scale must be positive definite");
        break;
      }
      case ConjugateFamily::normal:
        if (param("sd").minCoeff() <= 0.0) throw DomainError("normal scale must be positive");
        break;
    }
  }

  ConjugateFamily family_;
  std::map<std::string, Eigen::MatrixXd> params_;
};

namespace detail {
inline Eigen::MatrixXd scalar_matrix(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }
}  // namespace detail

/// Textbook conjugate update for the problems that admit one. `hyper` is the
/// hierarchical latent from the prior draw; the Dirichlet update conditions on
/// it (the concentration is itself random under the benchmark prior).
inline ConjugatePosterior conjugate_posterior(const Simulator& sim, const Dataset& x_raw,
                                              const Eigen::VectorXd& hyper = {}) {
  const auto& spec = sim.spec();
  const auto& h = spec.hyperparams;
  const double n = static_cast<double>(x_raw.rows());
  using detail::scalar_matrix;

  if (spec.name == "dirichlet_multinomial") {
    if (hyper.size() != spec.raw_theta_dim)
      throw ShapeError("dirichlet_multinomial oracle needs the concentration vector");
    const Eigen::VectorXd counts = x_raw.colwise().sum().transpose();
    return {ConjugateFamily::dirichlet, {{"alpha", hyper + counts}}};
  }
  if (spec.name == "poisson_gamma") {
    const Eigen::VectorXd s = x_raw.colwise().sum().transpose();
    return {ConjugateFamily::gamma,
            {{"shape", (s.array() + h.at("alpha")).matrix()},
             {"rate", Eigen::VectorXd::Constant(s.size(), h.at("beta") + n)}}};
  }
  if (spec.name == "normal_gamma") {
    const double kappa0 = h.at("kappa"), mu0 = h.at("mu0");
    const double a0 = h.at("d") / 2.0, b0 = 2.0 / h.at("eta");
    const double xbar = n > 0 ? x_raw.col(0).mean() : 0.0;
    const double ss = n > 0 ? (x_raw.col(0).array() - xbar).square().sum() : 0.0;
    const double kappa = kappa0 + n;
    return {ConjugateFamily::normal_inv_gamma,
            {{"mu", scalar_matrix((kappa0 * mu0 + n * xbar) / kappa)},
             {"kappa", scalar_matrix(kappa)},
             {"a", scalar_matrix(a0 + n / 2.0)},
             {"b", scalar_matrix(b0 + 0.5 * ss + kappa0 * n * (xbar - mu0) * (xbar - mu0) / (2.0 * kappa))}}};
  }
  if (spec.name == "normal_wishart") {
    const auto p = static_cast<Eigen::Index>(std::lround(h.at("dim")));
    const Eigen::VectorXd mu0 = Eigen::VectorXd::Constant(p, h.at("mu0"));
    const double kappa0 = h.at("kappa0");
    Eigen::VectorXd xbar = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(p, p);
    if (n > 0) {
      xbar = x_raw.colwise().mean().transpose();
      const Eigen::MatrixXd centered = x_raw.rowwise() - xbar.transpose();
      scatter = centered.transpose() * centered;
    }
    const double kappa = kappa0 + n;
    const Eigen::VectorXd dev = xbar - mu0;
    Eigen::MatrixXd psi = h.at("psi0") * Eigen::MatrixXd::Identity(p, p) + scatter +
                          (kappa0 * n / kappa) * dev * dev.transpose();
    return {ConjugateFamily::normal_inv_wishart,
            {{"mu", (kappa0 * mu0 + n * xbar) / kappa},
             {"kappa", scalar_matrix(kappa)},
             {"nu", scalar_matrix(h.at("nu0") + n)},
             {"psi", psi}}};
  }
  if (spec.name == "gaussian_toy") {
    const double prec = 1.0 + n / (h.at("obs_std") * h.at("obs_std"));
    const Eigen::VectorXd sum = x_raw.colwise().sum().transpose();
    return {ConjugateFamily::normal,
            {{"mean", sum / (h.at("obs_std") * h.at("obs_std")) / prec},
             {"sd", Eigen::VectorXd::Constant(sum.size(), 1.0 / std::sqrt(prec))}}};
  }
  throw NoOracle(spec.name + " has no conjugate posterior");
}

inline bool has_oracle(std::string_view name) {
  return name == "dirichlet_multinomial" || name == "poisson_gamma" || name == "normal_gamma" ||
         name == "normal_wishart" || name == "gaussian_toy";
}

}  // namespace npe::sim
