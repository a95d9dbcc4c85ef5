#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "npe/core/random.hpp"
#include "npe/nets/autodiff.hpp"

namespace npe::nets {

using ad::Matrix;
using ad::Parameter;
using ad::Tape;
using ad::Var;

template <class S>
using ParamList = std::vector<Parameter<S>*>;

enum class Activation { identity, silu, tanh };

template <class S>
Var<S> activate(Var<S> x, Activation a) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::silu: return ad::silu(x);
    case Activation::tanh: return ad::tanh(x);
  }
  return x;
}

/// Fan-in uniform initialization U(-1/sqrt(in), 1/sqrt(in)).
template <class S>
Matrix<S> fan_in_uniform(Eigen::Index rows, Eigen::Index cols, RandomStream& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  Matrix<S> w(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = static_cast<S>(rng.uniform(-bound, bound));
  return w;
}

template <class S>
struct Dense {
  Parameter<S> weight;  // out x in
  Parameter<S> bias;    // 1 x out

  Dense() = default;
  Dense(const std::string& name, int in, int out, RandomStream& rng, bool zero_init = false)
      : weight(name + ".weight", zero_init ? Matrix<S>::Zero(out, in) : fan_in_uniform<S>(out, in, rng)),
        bias(name + ".bias", Matrix<S>::Zero(1, out)) {}

  int in_dim() const { return static_cast<int>(weight.value.cols()); }
  int out_dim() const { return static_cast<int>(weight.value.rows()); }

  Var<S> operator()(Var<S> x) {
    Tape<S>& t = *x.tape;
    return ad::linear(x, t.param(weight), t.param(bias));
  }

  void collect(ParamList<S>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

/// Dense stack; `hidden` activation after every layer but the last, `output`
/// activation after the last.
template <class S>
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, std::vector<int> widths, RandomStream& rng, Activation hidden = Activation::silu,
      Activation output = Activation::identity, bool zero_init_output = false)
      : hidden_(hidden), output_(output) {
    if (widths.size() < 2) throw ConfigError(name + ": an MLP needs at least input and output widths");
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      const bool last = i + 2 == widths.size();
      layers_.emplace_back(name + "." + std::to_string(i), widths[i], widths[i + 1], rng, last && zero_init_output);
    }
  }

  Var<S> operator()(Var<S> x) {
    if (x.cols() != in_dim())
      throw ShapeError("MLP input has " + std::to_string(x.cols()) + " columns, expected " + std::to_string(in_dim()));
    for (std::size_t i = 0; i < layers_.size(); ++i)
      x = activate(layers_[i](x), i + 1 == layers_.size() ? output_ : hidden_);
    return x;
  }

  int in_dim() const { return layers_.front().in_dim(); }
  int out_dim() const { return layers_.back().out_dim(); }
  std::vector<Dense<S>>& layers() { return layers_; }

  void collect(ParamList<S>& out) {
    for (auto& l : layers_) l.collect(out);
  }

 private:
  std::vector<Dense<S>> layers_;
  Activation hidden_ = Activation::silu;
  Activation output_ = Activation::identity;
};

/// Sinusoidal features of a scalar, one row per input. Frequencies are
/// geometric, omega_j = 10^{-4 j / (dim/2 - 1)}, so wavelengths span [2 pi, 2 pi 10^4].
template <class S>
Matrix<S> positional_embedding(const Eigen::VectorXd& c, int dim) {
  if (dim < 2 || dim % 2 != 0) throw ConfigError("positional embedding width must be even and positive");
  const int half = dim / 2;
  Matrix<S> out(c.size(), dim);
  for (int j = 0; j < half; ++j) {
    const double omega = half == 1 ? 1.0 : std::pow(10.0, -4.0 * j / (half - 1));
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      out(i, 2 * j) = static_cast<S>(std::sin(c[i] * omega));
      out(i, 2 * j + 1) = static_cast<S>(std::cos(c[i] * omega));
    }
  }
  return out;
}

template <class S>
Eigen::Index parameter_count(const ParamList<S>& params) {
  Eigen::Index n = 0;
  for (const auto* p : params) n += p->size();
  return n;
}

template <class S>
void zero_grads(const ParamList<S>& params) {
  for (auto* p : params) p->zero_grad();
}

}  // namespace npe::nets
