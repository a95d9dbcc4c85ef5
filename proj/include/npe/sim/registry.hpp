#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "npe/sim/problems.hpp"

namespace npe::sim {

/// Benchmark grouping used in reports.
enum class ProblemGroup { no_encoder, iid, sequential };

inline std::string_view group_label(ProblemGroup g) {
  switch (g) {
    case ProblemGroup::no_encoder: return "No Encoder";
    case ProblemGroup::iid: return "IID";
    case ProblemGroup::sequential: return "Sequential";
  }
  return "?";
}

struct Registration {
  SimulatorSpec defaults;
  ProblemGroup group;
  std::function<std::unique_ptr<Simulator>(SimulatorSpec)> make;
};

namespace detail {

inline constexpr SampleRange kSingle{1, 1};
inline constexpr SampleRange kIid{50, 200};
inline constexpr SampleRange kSequential{100, 400};

template <class T>
Registration reg(SimulatorSpec s, ProblemGroup g) {
  return {std::move(s), g, [](SimulatorSpec spec) -> std::unique_ptr<Simulator> {
            return std::make_unique<T>(std::move(spec));
          }};
}

inline std::map<std::string, Registration, std::less<>> build_registry() {
  using G = ProblemGroup;
  using K = DataKind;
  std::map<std::string, Registration, std::less<>> r;
  auto add = [&r](Registration x) { r.emplace(x.defaults.name, std::move(x)); };

  add(reg<SumOfCosines>({"sum_of_cosines", 2, 2, 1, K::single, kSingle, {{"scale", 4.0}}}, G::no_encoder));

  add(reg<WitchHat>({"witch_hat", 5, 5, 5, K::single, kSingle, {{"d", 5}, {"sigma", 0.02}, {"delta", 0.05}}},
                    G::no_encoder));

  add(reg<DirichletMultinomial>(
      {"dirichlet_multinomial", 4, 5, 5, K::single, kSingle,
       {{"K", 5}, {"n_multi", 300}, {"alpha_shape", 5.0}, {"alpha_scale", 0.5}}},
      G::no_encoder));

  add(reg<PoissonGamma>({"poisson_gamma", 10, 10, 10, K::single, kSingle, {{"alpha", 2.0}, {"beta", 1.0}, {"dim", 10}}},
                        G::no_encoder));

  add(reg<Socks>({"socks", 10, 10, 10, K::single, kSingle,
                  {{"K", 10},
                   {"mu", 30.0},
                   {"sigma", 15.0},
                   {"alpha1", 30.0},
                   {"beta1", 4.0},
                   {"alpha2", 50.0},
                   {"beta2", 50.0},
                   {"mixing_coefficient", 0.75}}},
                 G::no_encoder));

  // One observation row holds n_surveys consecutive triples of detected counts.
  add(reg<SpeciesSampling>({"species_sampling", 2, 3, 30, K::single, kSingle,
                            {{"n_species", 3},
                             {"n_surveys", 10},
                             {"lambda_total", 50.0},
                             {"alpha_dirichlet", 2.0},
                             {"p_mixture", 0.7},
                             {"p_easy", 0.9},
                             {"p_hard", 0.3},
                             {"p_species2", 0.6},
                             {"p_species3", 0.7}}},
                           G::no_encoder));

  add(reg<NormalGamma>({"normal_gamma", 2, 2, 1, K::iid, kIid, {{"mu0", 0.0}, {"kappa", 1.0}, {"d", 8.0}, {"eta", 8.0}}},
                       G::iid));

  add(reg<NormalWishart>({"normal_wishart", 14, 14, 4, K::iid, kIid,
                          {{"dim", 4}, {"mu0", 0.0}, {"kappa0", 1.0}, {"nu0", 6.0}, {"psi0", 1.0}}},
                         G::iid));

  add(reg<GAndK>({"g_and_k", 4, 4, 1, K::iid, kIid,
                  {{"a_mean", 0.0},
                   {"a_std", 1.0},
                   {"b_shape", 5.0},
                   {"b_scale", 0.2},
                   {"g_mean", 0.0},
                   {"g_std", 1.0},
                   {"k_shape", 7.0},
                   {"k_scale", 1.0 / 7.0},
                   {"c", 0.8},
                   {"scale_odds_order", 5.0},
                   {"scale_even_order", 2.0},
                   {"scale_x", 10.0}}},
                 G::iid));

  add(reg<LotkaVolterra>({"lotka_volterra", 7, 7, 2, K::sequential, kSequential,
                          {{"alpha_min", 0.5},
                           {"alpha_max", 1.0},
                           {"beta_min", 0.01},
                           {"beta_max", 0.1},
                           {"gamma_min", 0.01},
                           {"gamma_max", 0.5},
                           {"delta_min", 0.005},
                           {"delta_max", 0.05},
                           {"sigma_shape", 5.0},
                           {"sigma_scale", 0.2},
                           {"rho_min", -0.1},
                           {"rho_max", 0.1},
                           {"x0_prey", 10.0},
                           {"x0_predator", 5.0},
                           {"dt", 0.1}}},
                         G::sequential));

  add(reg<FractionalBm>({"fbm", 5, 5, 1, K::sequential, kSequential,
                         {{"hurst_alpha", 1.0},
                          {"hurst_beta", 1.0},
                          {"tau2_alpha", 20.0},
                          {"tau2_beta", 1.0},
                          {"amplitude_alpha", 3.0},
                          {"amplitude_beta", 0.2},
                          {"phase_min", 0.0},
                          {"phase_max", 2.0 * std::numbers::pi},
                          {"period_min", 4.0},
                          {"period_max", 32.0},
                          {"dt", 0.1}}},
                        G::sequential));

  add(reg<StochasticVolatility>({"stochastic_volatility", 3, 3, 1, K::sequential, kSequential,
                                 {{"mu_mean", -1.0},
                                  {"mu_std", 0.5},
                                  {"phi_min", 0.9},
                                  {"phi_max", 0.999},
                                  {"sigma_min", 0.1},
                                  {"sigma_max", 0.3}}},
                                G::sequential));

  add(reg<MarkovSwitching>({"markov_switching", 6, 6, 1, K::sequential, kSequential,
                            {{"beta1_mean", 1.0},
                             {"beta1_tau", 0.5},
                             {"beta2_mean", -1.0},
                             {"beta2_tau", 0.5},
                             {"sigma_y_shape", 2.0},
                             {"sigma_y_scale", 0.5},
                             {"sigma_x_shape", 2.0},
                             {"sigma_x_scale", 0.5},
                             {"p1_a", 20.0},
                             {"p1_b", 2.0},
                             {"p2_a", 20.0},
                             {"p2_b", 2.0},
                             {"scale_factor", 1.0}}},
                           G::sequential));

  add(reg<VectorAutoregression>({"var", 21, 21, 3, K::sequential, kSequential,
                                 {{"dims", 3},
                                  {"lags", 2},
                                  {"tau", 0.45},
                                  {"theta", 0.25},
                                  {"sigma_shape", 2.0},
                                  {"sigma_scale", 1.0 / 6.0},
                                  {"shrink_factor", 0.98},
                                  {"burn_in", 50},
                                  {"scale_sigma", 3.0},
                                  {"scale_x", 100.0}}},
                                G::sequential));

  add(reg<GaussianToy>({"gaussian_toy", 2, 2, 2, K::single, kSingle, {{"dim", 2}, {"obs_std", 0.5}}},
                       G::no_encoder));
  return r;
}

inline const auto& registry() {
  static const auto r = build_registry();
  return r;
}

inline int hp_or(const Hyperparams& h, std::string_view key, int fallback) {
  auto it = h.find(key);
  return it == h.end() ? fallback : static_cast<int>(std::lround(it->second));
}

/// Recomputes dimensions that follow from structural hyperparameters so that
/// overrides such as `dim` or `lags` stay consistent.
inline void refresh_dimensions(SimulatorSpec& s) {
  const auto& h = s.hyperparams;
  const std::string& n = s.name;
  if (n == "witch_hat") {
    s.theta_dim = s.raw_theta_dim = s.data_dim = hp_or(h, "d", 5);
  } else if (n == "dirichlet_multinomial") {
    const int k = hp_or(h, "K", 5);
    s.raw_theta_dim = s.data_dim = k;
    s.theta_dim = k - 1;
  } else if (n == "poisson_gamma") {
    s.theta_dim = s.raw_theta_dim = s.data_dim = hp_or(h, "dim", 10);
  } else if (n == "socks") {
    s.theta_dim = s.raw_theta_dim = s.data_dim = hp_or(h, "K", 10);
  } else if (n == "species_sampling") {
    if (hp_or(h, "n_species", 3) != 3) throw ConfigError("species_sampling: detection model is defined for 3 species");
    s.data_dim = 3 * hp_or(h, "n_surveys", 10);
  } else if (n == "normal_wishart") {
    const int p = hp_or(h, "dim", 4);
    s.data_dim = p;
    s.theta_dim = s.raw_theta_dim = p + p * (p + 1) / 2;
  } else if (n == "var") {
    const int d = hp_or(h, "dims", 3);
    s.data_dim = d;
    s.theta_dim = s.raw_theta_dim = hp_or(h, "lags", 2) * d * d + d;
  } else if (n == "gaussian_toy") {
    s.theta_dim = s.raw_theta_dim = s.data_dim = hp_or(h, "dim", 2);
  }
}

}  // namespace detail

inline std::vector<std::string> registered_problems() {
  std::vector<std::string> out;
  for (const auto& [name, _] : detail::registry()) out.push_back(name);
  return out;
}

/// The fourteen benchmark problems in report order (excludes test fixtures).
inline const std::vector<std::string>& benchmark_problems() {
  static const std::vector<std::string> order{
      "sum_of_cosines", "witch_hat",      "dirichlet_multinomial", "socks",
      "species_sampling", "poisson_gamma", "normal_gamma",         "g_and_k",
      "normal_wishart", "lotka_volterra", "fbm",                   "stochastic_volatility",
      "markov_switching", "var"};
  return order;
}

inline const Registration& registration(std::string_view name) {
  const auto& r = detail::registry();
  auto it = r.find(name);
  if (it == r.end()) throw NotRegistered("unknown problem: " + std::string(name));
  return it->second;
}

inline ProblemGroup problem_group(std::string_view name) { return registration(name).group; }

/// Builds a simulator from its registered defaults. Overrides may replace any
/// hyperparameter; `n_min`/`n_max` override the sample-size range.
inline std::unique_ptr<Simulator> make_simulator(std::string_view name, const Hyperparams& overrides = {}) {
  const Registration& reg = registration(name);
  SimulatorSpec spec = reg.defaults;
  for (const auto& [key, value] : overrides) {
    if (key == "n_min") {
      spec.n_range.min = static_cast<int>(std::lround(value));
    } else if (key == "n_max") {
      spec.n_range.max = static_cast<int>(std::lround(value));
    } else if (spec.hyperparams.contains(key)) {
      spec.hyperparams[key] = value;
    } else {
      throw ConfigError(spec.name + ": unknown hyperparameter " + key);
    }
  }
  detail::refresh_dimensions(spec);
  return reg.make(std::move(spec));
}

}  // namespace npe::sim
