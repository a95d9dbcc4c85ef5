#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "npe/core/errors.hpp"

// Eager reverse-mode differentiation over dense matrices. Rows index the batch.
// A Tape owns every intermediate of one forward pass; backward() walks nodes in
// reverse creation order, which is a valid topological order by construction.

namespace npe::ad {

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class S>
struct Parameter {
  std::string name;
  Matrix<S> value;
  Matrix<S> grad;

  Parameter() = default;
  Parameter(std::string n, Matrix<S> v) : name(std::move(n)), value(std::move(v)) {
    grad = Matrix<S>::Zero(value.rows(), value.cols());
  }
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Eigen::Index size() const { return value.size(); }
};

template <class S>
class Tape;

template <class S>
struct Var {
  Tape<S>* tape = nullptr;
  std::size_t id = 0;

  const Matrix<S>& value() const { return tape->value(id); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

template <class S>
class Tape {
 public:
  using Mat = Matrix<S>;
  using Backward = std::function<void(const Mat& grad, const Mat& output)>;

  /// With `track_gradients` false every parameter enters as a constant, so
  /// no reverse closures are stored (inference).
  explicit Tape(bool track_gradients = true) : track_(track_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<S> constant(Mat v) { return push(std::move(v), false, {}, nullptr); }

  /// One node per parameter per tape; repeated uses share it.
  Var<S> param(Parameter<S>& p) {
    if (auto it = params_.find(&p); it != params_.end()) return it->second;
    Var<S> v = push(p.value, track_, {}, track_ ? &p : nullptr);
    params_.emplace(&p, v);
    return v;
  }

  /// Records an op result. `back` receives d(loss)/d(output) and the output, and must call
  /// accumulate() for each differentiable input.
  Var<S> record(Mat v, std::initializer_list<Var<S>> inputs, Backward back) {
    bool needs = false;
    for (const auto& in : inputs) needs = needs || nodes_[in.id].needs_grad;
    return push(std::move(v), needs, needs ? std::move(back) : Backward{}, nullptr);
  }

  Var<S> record(Mat v, std::span<const Var<S>> inputs, Backward back) {
    bool needs = false;
    for (const auto& in : inputs) needs = needs || nodes_[in.id].needs_grad;
    return push(std::move(v), needs, needs ? std::move(back) : Backward{}, nullptr);
  }

  void accumulate(Var<S> v, const Mat& g) {
    Node& n = nodes_[v.id];
    if (!n.needs_grad) return;
    if (g.rows() != n.value.rows() || g.cols() != n.value.cols())
      throw ShapeError("gradient shape mismatch in reverse pass");
    if (n.has_grad) {
      n.grad += g;
    } else {
      n.grad = g;
      n.has_grad = true;
    }
  }

  bool needs_grad(Var<S> v) const { return nodes_[v.id].needs_grad; }
  const Mat& value(std::size_t id) const { return nodes_[id].value; }
  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 and propagates. Parameter gradients are added
  /// to Parameter::grad, so callers zero them between steps.
  void backward(Var<S> loss) {
    if (loss.rows() != 1 || loss.cols() != 1) throw ShapeError("backward() needs a scalar loss");
    accumulate(loss, Mat::Ones(1, 1));
    reached_.clear();
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.has_grad) continue;
      if (n.back) n.back(n.grad, n.value);
      if (n.param) {
        n.param->grad += n.grad;
        reached_.insert(n.param);
      }
      n.grad.resize(0, 0);  // intermediate gradients are not needed twice
      n.has_grad = false;
    }
  }

  /// Parameters used on this tape that received no gradient in the last
  /// backward pass. Their Parameter::grad is left untouched (zero after a reset).
  std::vector<const Parameter<S>*> detached() const {
    std::vector<const Parameter<S>*> out;
    for (const auto& [p, v] : params_)
      if (!reached_.contains(p)) out.push_back(p);
    return out;
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool has_grad = false;
    bool needs_grad = false;
    Backward back;
    Parameter<S>* param = nullptr;
  };

  Var<S> push(Mat v, bool needs, Backward back, Parameter<S>* p) {
    nodes_.push_back(Node{std::move(v), Mat(), false, needs, std::move(back), p});
    return Var<S>{this, nodes_.size() - 1};
  }

  bool track_ = true;
  std::deque<Node> nodes_;
  std::unordered_map<Parameter<S>*, Var<S>> params_;
  std::unordered_set<const Parameter<S>*> reached_;
};

// ---------------------------------------------------------------------------
// Broadcasting helpers. A broadcast operand is 1x1, 1xC (row) or Rx1 (column).
// ---------------------------------------------------------------------------

namespace detail {

template <class S>
Matrix<S> expand(const Matrix<S>& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  if (m.rows() == 1 && m.cols() == 1) return Matrix<S>::Constant(rows, cols, m(0, 0));
  if (m.rows() == 1 && m.cols() == cols) return m.replicate(rows, 1);
  if (m.cols() == 1 && m.rows() == rows) return m.replicate(1, cols);
  throw ShapeError("operands are not broadcast-compatible");
}

template <class S>
Matrix<S> reduce_to(const Matrix<S>& g, Eigen::Index rows, Eigen::Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == 1) return Matrix<S>::Constant(1, 1, g.sum());
  if (rows == 1) return g.colwise().sum();
  return g.rowwise().sum();
}

template <class S>
std::pair<Eigen::Index, Eigen::Index> broadcast_shape(const Var<S>& a, const Var<S>& b) {
  return {std::max(a.rows(), b.rows()), std::max(a.cols(), b.cols())};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic
// ---------------------------------------------------------------------------

template <class S>
Var<S> operator+(Var<S> a, Var<S> b) {
  auto [r, c] = detail::broadcast_shape(a, b);
  Matrix<S> out = detail::expand(a.value(), r, c) + detail::expand(b.value(), r, c);
  Tape<S>* t = a.tape;
  return t->record(std::move(out), {a, b}, [t, a, b](const Matrix<S>& g, const Matrix<S>&) {
    t->accumulate(a, detail::reduce_to(g, a.rows(), a.cols()));
    t->accumulate(b, detail::reduce_to(g, b.rows(), b.cols()));
  });
}

template <class S>
Var<S> operator-(Var<S> a, Var<S> b) {
  auto [r, c] = detail::broadcast_shape(a, b);
  Matrix<S> out = detail::expand(a.value(), r, c) - detail::expand(b.value(), r, c);
  Tape<S>* t = a.tape;
  return t->record(std::move(out), {a, b}, [t, a, b](const Matrix<S>& g, const Matrix<S>&) {
    t->accumulate(a, detail::reduce_to(g, a.rows(), a.cols()));
    t->accumulate(b, detail::reduce_to<S>(-g, b.rows(), b.cols()));
  });
}

/// Elementwise (Hadamard) product with broadcasting.
template <class S>
Var<S> operator*(Var<S> a, Var<S> b) {
  auto [r, c] = detail::broadcast_shape(a, b);
  Matrix<S> out = detail::expand(a.value(), r, c).cwiseProduct(detail::expand(b.value(), r, c));
  Tape<S>* t = a.tape;
  return t->record(std::move(out), {a, b}, [t, a, b, r, c](const Matrix<S>& g, const Matrix<S>&) {
    if (t->needs_grad(a))
      t->accumulate(a, detail::reduce_to<S>(g.cwiseProduct(detail::expand(b.value(), r, c)), a.rows(), a.cols()));
    if (t->needs_grad(b))
      t->accumulate(b, detail::reduce_to<S>(g.cwiseProduct(detail::expand(a.value(), r, c)), b.rows(), b.cols()));
  });
}

template <class S>
Var<S> scale(Var<S> a, S s) {
  Tape<S>* t = a.tape;
  return t->record(a.value() * s, {a}, [t, a, s](const Matrix<S>& g, const Matrix<S>&) { t->accumulate(a, g * s); });
}

template <class S>
Var<S> operator-(Var<S> a) {
  return scale(a, S(-1));
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

template <class S>
Var<S> matmul(Var<S> a, Var<S> b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul inner dimensions differ");
  Tape<S>* t = a.tape;
  return t->record(a.value() * b.value(), {a, b}, [t, a, b](const Matrix<S>& g, const Matrix<S>&) {
    if (t->needs_grad(a)) t->accumulate(a, g * b.value().transpose());
    if (t->needs_grad(b)) t->accumulate(b, a.value().transpose() * g);
  });
}

/// x W^T + b with W stored out x in and b as a 1 x out row.
template <class S>
Var<S> linear(Var<S> x, Var<S> w, Var<S> b) {
  if (x.cols() != w.cols())
    throw ShapeError("linear: input width " + std::to_string(x.cols()) + " does not match weight " +
                     std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
  Matrix<S> out = x.value() * w.value().transpose();
  out.rowwise() += b.value().row(0);
  Tape<S>* t = x.tape;
  return t->record(std::move(out), {x, w, b}, [t, x, w, b](const Matrix<S>& g, const Matrix<S>&) {
    if (t->needs_grad(x)) t->accumulate(x, g * w.value());
    if (t->needs_grad(w)) t->accumulate(w, g.transpose() * x.value());
    if (t->needs_grad(b)) t->accumulate(b, g.colwise().sum());
  });
}

// ---------------------------------------------------------------------------
// Pointwise nonlinearities
// ---------------------------------------------------------------------------

template <class S>
Var<S> silu(Var<S> a) {
  Matrix<S> sig = (S(1) + (-a.value().array()).exp()).inverse().matrix();
  Matrix<S> out = a.value().cwiseProduct(sig);
  Tape<S>* t = a.tape;
  return t->record(std::move(out), {a}, [t, a, sig = std::move(sig)](const Matrix<S>& g, const Matrix<S>&) {
    const auto& x = a.value().array();
    t->accumulate(a, (g.array() * sig.array() * (S(1) + x * (S(1) - sig.array()))).matrix());
  });
}

template <class S>
Var<S> tanh(Var<S> a) {
  Matrix<S> out = a.value().array().tanh().matrix();
  Tape<S>* t = a.tape;
  return t->record(std::move(out), {a}, [t, a](const Matrix<S>& g, const Matrix<S>& y) {
    t->accumulate(a, (g.array() * (S(1) - y.array().square())).matrix());
  });
}

template <class S>
Var<S> sigmoid(Var<S> a) {
  Matrix<S> out = (S(1) + (-a.value().array()).exp()).inverse().matrix();
  Tape<S>* t = a.tape;
  return t->record(std::move(out), {a}, [t, a](const Matrix<S>& g, const Matrix<S>& y) {
    const auto& s = y.array();
    t->accumulate(a, (g.array() * s * (S(1) - s)).matrix());
  });
}

template <class S>
Var<S> exp(Var<S> a) {
  Matrix<S> out = a.value().array().exp().matrix();
  Tape<S>* t = a.tape;
  return t->record(std::move(out), {a}, [t, a](const Matrix<S>& g, const Matrix<S>& y) {
    t->accumulate(a, g.cwiseProduct(y));
  });
}

template <class S>
Var<S> atan(Var<S> a) {
  Tape<S>* t = a.tape;
  return t->record(a.value().array().atan().matrix(), {a}, [t, a](const Matrix<S>& g, const Matrix<S>&) {
    t->accumulate(a, (g.array() / (S(1) + a.value().array().square())).matrix());
  });
}

template <class S>
Var<S> square(Var<S> a) {
  Tape<S>* t = a.tape;
  return t->record(a.value().array().square().matrix(), {a}, [t, a](const Matrix<S>& g, const Matrix<S>&) {
    t->accumulate(a, (S(2) * g.array() * a.value().array()).matrix());
  });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

template <class S>
Var<S> sum(Var<S> a) {
  Tape<S>* t = a.tape;
  return t->record(Matrix<S>::Constant(1, 1, a.value().sum()), {a}, [t, a](const Matrix<S>& g, const Matrix<S>&) {
    t->accumulate(a, Matrix<S>::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

template <class S>
Var<S> mean(Var<S> a) {
  return scale(sum(a), S(1) / static_cast<S>(a.value().size()));
}

/// Per-row sum, R x C -> R x 1.
template <class S>
Var<S> row_sum(Var<S> a) {
  Tape<S>* t = a.tape;
  return t->record(a.value().rowwise().sum(), {a}, [t, a](const Matrix<S>& g, const Matrix<S>&) {
    t->accumulate(a, g.replicate(1, a.cols()));
  });
}

/// Sums consecutive row blocks: rows [offsets[i], offsets[i+1]) form output row i.
template <class S>
Var<S> segment_sum(Var<S> a, std::vector<Eigen::Index> offsets) {
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != a.rows())
    throw ShapeError("segment offsets must span all rows");
  const auto segments = static_cast<Eigen::Index>(offsets.size() - 1);
  Matrix<S> out(segments, a.cols());
  for (Eigen::Index i = 0; i < segments; ++i) {
    const Eigen::Index lo = offsets[i], hi = offsets[i + 1];
    out.row(i) = a.value().middleRows(lo, hi - lo).colwise().sum();
  }
  Tape<S>* t = a.tape;
  return t->record(std::move(out), {a}, [t, a, offsets = std::move(offsets)](const Matrix<S>& g, const Matrix<S>&) {
    Matrix<S> ga(a.rows(), a.cols());
    for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
      const Eigen::Index lo = offsets[i], hi = offsets[i + 1];
      ga.middleRows(lo, hi - lo) = g.row(static_cast<Eigen::Index>(i)).replicate(hi - lo, 1);
    }
    t->accumulate(a, ga);
  });
}

// ---------------------------------------------------------------------------
// Reshaping
// ---------------------------------------------------------------------------

template <class S>
Var<S> concat_cols(std::span<const Var<S>> parts) {
  if (parts.empty()) throw ShapeError("concat of nothing");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix<S> out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  Tape<S>* t = parts.front().tape;
  std::vector<Var<S>> keep(parts.begin(), parts.end());
  return t->record(std::move(out), parts, [t, keep = std::move(keep)](const Matrix<S>& g, const Matrix<S>&) {
    Eigen::Index at = 0;
    for (const auto& p : keep) {
      t->accumulate(p, g.middleCols(at, p.cols()));
      at += p.cols();
    }
  });
}

template <class S>
Var<S> concat_cols(std::initializer_list<Var<S>> parts) {
  return concat_cols(std::span<const Var<S>>(parts.begin(), parts.size()));
}

template <class S>
Var<S> slice_cols(Var<S> a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || start + count > a.cols()) throw ShapeError("slice_cols out of range");
  Tape<S>* t = a.tape;
  return t->record(a.value().middleCols(start, count), {a}, [t, a, start, count](const Matrix<S>& g, const Matrix<S>&) {
    Matrix<S> ga = Matrix<S>::Zero(a.rows(), a.cols());
    ga.middleCols(start, count) = g;
    t->accumulate(a, ga);
  });
}

/// out[:, j] = a[:, index[j]].
template <class S>
Var<S> gather_cols(Var<S> a, std::vector<Eigen::Index> index) {
  Matrix<S> out(a.rows(), static_cast<Eigen::Index>(index.size()));
  for (std::size_t j = 0; j < index.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = a.value().col(index[j]);
  Tape<S>* t = a.tape;
  return t->record(std::move(out), {a}, [t, a, index = std::move(index)](const Matrix<S>& g, const Matrix<S>&) {
    Matrix<S> ga = Matrix<S>::Zero(a.rows(), a.cols());
    for (std::size_t j = 0; j < index.size(); ++j) ga.col(index[j]) += g.col(static_cast<Eigen::Index>(j));
    t->accumulate(a, ga);
  });
}

/// out[i, :] = a[index[i], :], or zeros where index[i] < 0.
template <class S>
Var<S> gather_rows(Var<S> a, std::vector<Eigen::Index> index) {
  Matrix<S> out(static_cast<Eigen::Index>(index.size()), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= 0)
      out.row(static_cast<Eigen::Index>(i)) = a.value().row(index[i]);
    else
      out.row(static_cast<Eigen::Index>(i)).setZero();
  }
  Tape<S>* t = a.tape;
  return t->record(std::move(out), {a}, [t, a, index = std::move(index)](const Matrix<S>& g, const Matrix<S>&) {
    Matrix<S> ga = Matrix<S>::Zero(a.rows(), a.cols());
    for (std::size_t i = 0; i < index.size(); ++i)
      if (index[i] >= 0) ga.row(index[i]) += g.row(static_cast<Eigen::Index>(i));
    t->accumulate(a, ga);
  });
}

}  // namespace npe::ad
