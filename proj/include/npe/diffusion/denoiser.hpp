#pragma once

#include <string>
#include <vector>

#include "npe/diffusion/edm.hpp"
#include "npe/nets/layers.hpp"

namespace npe::diffusion {

using nets::Matrix;
using nets::ParamList;
using nets::Tape;
using nets::Var;

struct DenoiserConfig {
  int hidden_width = 256;
  int hidden_layers = 4;
  int embed_dim = 32;  // positional embedding of c_noise
};

/// Mean over rows of lambda(sigma_i) ||mu_i - theta0_i||^2.
template <class S>
Var<S> weighted_denoising_loss(Tape<S>& tape, Var<S> mu, const Eigen::MatrixXd& theta0, const Eigen::VectorXd& sigma,
                               double sigma_data) {
  const Eigen::Index b = theta0.rows();
  if (mu.rows() != b || mu.cols() != theta0.cols() || sigma.size() != b)
    throw ShapeError("denoising loss operands do not match");
  Eigen::VectorXd weight(b);
  for (Eigen::Index i = 0; i < b; ++i) weight[i] = loss_weight(sigma[i], sigma_data);
  Var<S> residual = mu - tape.constant(Matrix<S>(theta0.cast<S>()));
  Var<S> weighted = ad::row_sum(ad::square(residual)) * tape.constant(Matrix<S>(weight.cast<S>()));
  return ad::scale(ad::sum(weighted), static_cast<S>(1.0 / static_cast<double>(b)));
}

/// mu(theta_t, sigma | s) = c_skip theta_t + c_out F([c_in theta_t, embed(c_noise), s]).
/// F is an MLP with a zero-initialized output layer, so mu starts at c_skip theta_t.
template <class S>
class Denoiser {
 public:
  Denoiser() = default;
  Denoiser(int theta_dim, int cond_dim, EdmConfig edm, DenoiserConfig cfg, RandomStream& rng)
      : edm_(edm), cfg_(cfg), theta_dim_(theta_dim), cond_dim_(cond_dim) {
    edm_.validate();
    if (theta_dim < 1 || cond_dim < 0 || cfg.hidden_layers < 1 || cfg.hidden_width < 1)
      throw ConfigError("invalid denoiser dimensions");
    std::vector<int> widths{theta_dim + cfg.embed_dim + cond_dim};
    for (int i = 0; i < cfg.hidden_layers; ++i) widths.push_back(cfg.hidden_width);
    widths.push_back(theta_dim);
    net_ = nets::Mlp<S>("denoiser", widths, rng, nets::Activation::silu, nets::Activation::identity, true);
  }

  const EdmConfig& edm() const { return edm_; }
  int theta_dim() const { return theta_dim_; }
  int cond_dim() const { return cond_dim_; }
  nets::Mlp<S>& raw_net() { return net_; }

  /// theta_t: B x P constants; sigma: B positive levels; cond: B x K.
  Var<S> operator()(Tape<S>& tape, const Eigen::MatrixXd& theta_t, const Eigen::VectorXd& sigma, Var<S> cond) {
    const Eigen::Index b = theta_t.rows();
    if (theta_t.cols() != theta_dim_ || sigma.size() != b || cond.rows() != b || cond.cols() != cond_dim_)
      throw ShapeError("denoiser inputs do not match (B x " + std::to_string(theta_dim_) + ", B, B x " +
                       std::to_string(cond_dim_) + ")");
    Eigen::VectorXd c_skip(b), c_out(b), c_in(b), c_noise(b);
    for (Eigen::Index i = 0; i < b; ++i) {
      if (!(sigma[i] > 0)) throw DomainError("denoiser needs sigma > 0");
      const auto c = precondition_coeffs(sigma[i], edm_);
      c_skip[i] = c.c_skip;
      c_out[i] = c.c_out;
      c_in[i] = c.c_in;
      c_noise[i] = c.c_noise;
    }
    const Eigen::MatrixXd scaled = theta_t.array().colwise() * c_in.array();
    const Var<S> parts[] = {tape.constant(scaled.cast<S>()),
                            tape.constant(nets::positional_embedding<S>(c_noise, cfg_.embed_dim)), cond};
    Var<S> f = raw(ad::concat_cols<S>(parts));
    const Eigen::MatrixXd skip = theta_t.array().colwise() * c_skip.array();
    return f * tape.constant(Matrix<S>(c_out.cast<S>())) + tape.constant(Matrix<S>(skip.cast<S>()));
  }

  /// Draws sigma per row and n ~ N(0, sigma^2 I), then evaluates loss_at.
  Var<S> loss(Tape<S>& tape, const Eigen::MatrixXd& theta0, Var<S> cond, RandomStream& rng) {
    const Eigen::Index b = theta0.rows();
    Eigen::VectorXd sigma(b);
    Eigen::MatrixXd noise(b, theta0.cols());
    for (Eigen::Index i = 0; i < b; ++i) {
      sigma[i] = sample_training_sigma(edm_, rng);
      for (Eigen::Index j = 0; j < theta0.cols(); ++j) noise(i, j) = sigma[i] * rng.normal();
    }
    return loss_at(tape, theta0, cond, sigma, noise);
  }

  Var<S> loss_at(Tape<S>& tape, const Eigen::MatrixXd& theta0, Var<S> cond, const Eigen::VectorXd& sigma,
                 const Eigen::MatrixXd& noise) {
    return weighted_denoising_loss(tape, (*this)(tape, theta0 + noise, sigma, cond), theta0, sigma, edm_.sigma_data);
  }

  /// One Euler trajectory per row of `cond` (M x K); returns M x P.
  Eigen::MatrixXd sample(const Matrix<S>& cond, RandomStream& rng) {
    if (cond.cols() != cond_dim_) throw ShapeError("conditioning width does not match the denoiser");
    DenoiseFn fn = [&](const Eigen::MatrixXd& theta_t, double sigma) -> Eigen::MatrixXd {
      Tape<S> tape(false);
      Var<S> mu = (*this)(tape, theta_t, Eigen::VectorXd::Constant(theta_t.rows(), sigma), tape.constant(cond));
      return mu.value().template cast<double>();
    };
    return euler_sample(edm_, fn, static_cast<int>(cond.rows()), theta_dim_, rng);
  }

  void collect(ParamList<S>& out) { net_.collect(out); }

 private:
  Var<S> raw(Var<S> x) {
    auto& layers = net_.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      x = layers[i](x);
      if (i + 1 < layers.size()) x = ad::silu(x);
      if (!x.value().allFinite())
        throw NumericsError("non-finite activation in denoiser layer " + std::to_string(i));
    }
    return x;
  }

  EdmConfig edm_;
  DenoiserConfig cfg_;
  int theta_dim_ = 0;
  int cond_dim_ = 0;
  nets::Mlp<S> net_;
};

}  // namespace npe::diffusion
