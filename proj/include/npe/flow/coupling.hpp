#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "npe/nets/layers.hpp"

namespace npe::flow {

using nets::Matrix;
using nets::ParamList;
using nets::Tape;
using nets::Var;

enum class SoftClamp { tanh, atan };

inline SoftClamp parse_soft_clamp(std::string_view s) {
  if (s == "tanh") return SoftClamp::tanh;
  if (s == "atan") return SoftClamp::atan;
  throw ConfigError("unknown soft clamp: " + std::string(s));
}

struct FlowConfig {
  int n_flows = 32;
  double alpha = 0.1;  // |clamped log-scale| < alpha
  SoftClamp clamp = SoftClamp::tanh;
  int hidden_width = 80;
  int hidden_layers = 2;
};

/// alpha tanh(s / alpha), or the (2 alpha / pi) atan(s / alpha) variant.
template <class S>
Var<S> soft_clamp(Var<S> s, double alpha, SoftClamp kind) {
  const S a = static_cast<S>(alpha);
  if (kind == SoftClamp::tanh) return ad::scale(ad::tanh(ad::scale(s, S(1) / a)), a);
  return ad::scale(ad::atan(ad::scale(s, S(1) / a)), static_cast<S>(2.0 * alpha / 3.14159265358979323846));
}

inline double soft_clamp(double s, double alpha, SoftClamp kind) {
  if (kind == SoftClamp::tanh) return alpha * std::tanh(s / alpha);
  return 2.0 * alpha / 3.14159265358979323846 * std::atan(s / alpha);
}

/// Conditional flow of affine couplings. The forward map sends latent z to theta:
/// each layer permutes the coordinates, then the first ceil(P/2) ("active") are
/// scaled by exp(clamp(s)) and shifted by t, with (s, t) a function of the
/// remaining coordinates and the conditioning vector.
template <class S>
class FlowModel {
 public:
  FlowModel() = default;
  FlowModel(int theta_dim, int cond_dim, FlowConfig cfg, RandomStream& rng)
      : cfg_(cfg), theta_dim_(theta_dim), cond_dim_(cond_dim), active_((theta_dim + 1) / 2) {
    if (theta_dim < 1 || cond_dim < 0 || cfg.n_flows < 1 || cfg.hidden_layers < 1 || cfg.hidden_width < 1)
      throw ConfigError("invalid flow dimensions");
    if (!(cfg.alpha > 0)) throw ConfigError("soft-clamp constant must be positive");
    const int passive = theta_dim - active_;
    for (int k = 0; k < cfg.n_flows; ++k) {
      std::vector<Eigen::Index> perm(static_cast<std::size_t>(theta_dim));
      std::iota(perm.begin(), perm.end(), Eigen::Index{0});
      std::shuffle(perm.begin(), perm.end(), rng.engine());
      std::vector<Eigen::Index> inv(perm.size());
      for (std::size_t j = 0; j < perm.size(); ++j) inv[static_cast<std::size_t>(perm[j])] = static_cast<Eigen::Index>(j);
      perms_.push_back(std::move(perm));
      inverse_perms_.push_back(std::move(inv));
      std::vector<int> widths{passive + cond_dim};
      for (int i = 0; i < cfg.hidden_layers; ++i) widths.push_back(cfg.hidden_width);
      widths.push_back(2 * active_);
      conditioners_.emplace_back("flow." + std::to_string(k), widths, rng, nets::Activation::silu,
                                 nets::Activation::identity, true);
    }
  }

  const FlowConfig& config() const { return cfg_; }
  int theta_dim() const { return theta_dim_; }
  int cond_dim() const { return cond_dim_; }
  int active_dim() const { return active_; }
  const std::vector<Eigen::Index>& permutation(int k) const { return perms_[static_cast<std::size_t>(k)]; }
  nets::Mlp<S>& conditioner(int k) { return conditioners_[static_cast<std::size_t>(k)]; }

  /// z (B x P) to theta; second element is log|det d theta / d z| per row (B x 1).
  std::pair<Var<S>, Var<S>> forward(Var<S> z, Var<S> cond) {
    check(z, cond);
    Tape<S>& tape = *z.tape;
    Var<S> x = z;
    Var<S> log_det = tape.constant(Matrix<S>::Zero(z.rows(), 1));
    for (std::size_t k = 0; k < conditioners_.size(); ++k) {
      x = ad::gather_cols(x, perms_[k]);
      auto [scale, shift] = coefficients(k, x, cond);
      Var<S> a = ad::slice_cols(x, 0, active_) * ad::exp(scale) + shift;
      x = join(a, x);
      log_det = log_det + ad::row_sum(scale);
      check_finite(x, k);
    }
    return {x, log_det};
  }

  /// theta to z; second element is log|det d z / d theta| per row.
  std::pair<Var<S>, Var<S>> inverse(Var<S> theta, Var<S> cond) {
    check(theta, cond);
    Tape<S>& tape = *theta.tape;
    Var<S> x = theta;
    Var<S> log_det = tape.constant(Matrix<S>::Zero(theta.rows(), 1));
    for (std::size_t k = conditioners_.size(); k-- > 0;) {
      auto [scale, shift] = coefficients(k, x, cond);
      Var<S> a = (ad::slice_cols(x, 0, active_) - shift) * ad::exp(-scale);
      x = ad::gather_cols(join(a, x), inverse_perms_[k]);
      log_det = log_det - ad::row_sum(scale);
      check_finite(x, k);
    }
    return {x, log_det};
  }

  /// log q(theta | s) per row (B x 1).
  Var<S> log_prob(Tape<S>& tape, const Eigen::MatrixXd& theta, Var<S> cond) {
    auto [z, log_det] = inverse(tape.constant(Matrix<S>(theta.cast<S>())), cond);
    const S norm = static_cast<S>(-0.5 * theta_dim_ * std::log(2.0 * 3.14159265358979323846));
    Var<S> base = ad::scale(ad::row_sum(ad::square(z)), S(-0.5));
    return base + log_det + tape.constant(Matrix<S>::Constant(1, 1, norm));
  }

  /// Mean negative log-density over the batch. `rng` is unused; the signature
  /// matches the other decoders.
  Var<S> loss(Tape<S>& tape, const Eigen::MatrixXd& theta, Var<S> cond, RandomStream&) {
    return ad::scale(ad::sum(log_prob(tape, theta, cond)), static_cast<S>(-1.0 / static_cast<double>(theta.rows())));
  }

  /// One draw per row of `cond` (M x K); returns M x P.
  Eigen::MatrixXd sample(const Matrix<S>& cond, RandomStream& rng) {
    if (cond.cols() != cond_dim_) throw ShapeError("conditioning width does not match the flow");
    Matrix<S> z(cond.rows(), theta_dim_);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = static_cast<S>(rng.normal());
    Tape<S> tape(false);
    return forward(tape.constant(std::move(z)), tape.constant(cond)).first.value().template cast<double>();
  }

  void collect(ParamList<S>& out) {
    for (auto& c : conditioners_) c.collect(out);
  }

 private:
  std::pair<Var<S>, Var<S>> coefficients(std::size_t k, Var<S> x, Var<S> cond) {
    const Var<S> parts[] = {ad::slice_cols(x, active_, theta_dim_ - active_), cond};
    Var<S> h = conditioners_[k](ad::concat_cols<S>(parts));
    return {soft_clamp(ad::slice_cols(h, 0, active_), cfg_.alpha, cfg_.clamp), ad::slice_cols(h, active_, active_)};
  }

  Var<S> join(Var<S> active, Var<S> x) {
    const Var<S> parts[] = {active, ad::slice_cols(x, active_, theta_dim_ - active_)};
    return ad::concat_cols<S>(parts);
  }

  void check(Var<S> x, Var<S> cond) const {
    if (x.cols() != theta_dim_ || cond.cols() != cond_dim_ || cond.rows() != x.rows())
      throw ShapeError("flow inputs do not match (B x " + std::to_string(theta_dim_) + ", B x " +
                       std::to_string(cond_dim_) + ")");
  }

  static void check_finite(Var<S> x, std::size_t k) {
    if (!x.value().allFinite()) throw NumericsError("non-finite values in flow " + std::to_string(k));
  }

  FlowConfig cfg_;
  int theta_dim_ = 0;
  int cond_dim_ = 0;
  int active_ = 0;
  std::vector<std::vector<Eigen::Index>> perms_;
  std::vector<std::vector<Eigen::Index>> inverse_perms_;
  std::vector<nets::Mlp<S>> conditioners_;
};

}  // namespace npe::flow
