#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "npe/nets/layers.hpp"

namespace npe::nets {

/// Cosine decay from `base` at step 0 to 0 at `total`.
inline double cosine_learning_rate(double base, long step, long total) {
  if (total <= 0) return base;
  const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(total));
  return 0.5 * base * (1.0 + std::cos(3.14159265358979323846 * frac));
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam. Moment buffers are matched to parameters by position,
/// so the same parameter list (same order) must be passed on every step.
template <class S>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// Throws NumericsError without touching any parameter if a gradient is not finite.
  void step(const ParamList<S>& params) {
    for (const auto* p : params)
      if (!p->grad.allFinite()) throw NumericsError("non-finite gradient in " + p->name);
    if (m_.empty()) {
      for (const auto* p : params) {
        m_.push_back(Matrix<S>::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Matrix<S>::Zero(p->value.rows(), p->value.cols()));
      }
    }
    if (m_.size() != params.size()) throw ShapeError("optimizer state does not match parameter list");
    ++step_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    const S b1 = static_cast<S>(cfg_.beta1), b2 = static_cast<S>(cfg_.beta2);
    const S lr = static_cast<S>(cfg_.lr / c1);
    const S inv_c2 = static_cast<S>(1.0 / c2);
    const S eps = static_cast<S>(cfg_.eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i];
      if (m_[i].rows() != p.value.rows() || m_[i].cols() != p.value.cols())
        throw ShapeError("optimizer state shape mismatch for " + p.name);
      m_[i] = b1 * m_[i] + (S(1) - b1) * p.grad;
      v_[i] = b2 * v_[i] + (S(1) - b2) * p.grad.cwiseAbs2();
      p.value.array() -= lr * m_[i].array() / ((v_[i].array() * inv_c2).sqrt() + eps);
    }
  }

  long steps() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  std::vector<Matrix<S>>& first_moments() { return m_; }
  std::vector<Matrix<S>>& second_moments() { return v_; }
  void set_steps(long s) { step_ = s; }
  void set_learning_rate(double lr) { cfg_.lr = lr; }

 private:
  AdamConfig cfg_;
  long step_ = 0;
  std::vector<Matrix<S>> m_;
  std::vector<Matrix<S>> v_;
};

}  // namespace npe::nets
