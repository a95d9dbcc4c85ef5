#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "npe/nets/layers.hpp"
#include "npe/sim/spec.hpp"

namespace npe::nets {

using sim::Dataset;

inline constexpr double kStdFloor = 1e-8;

struct DeepSetConfig {
  int element_width = 128;  // per-row network
  int pooled_width = 128;   // post-pool network
  int out_dim = 64;
};

/// s(X) = rho([a_p * sum_i phi(z_i), a_m * mean, a_s * std, a_n * N]) where z
/// is X standardized per dataset. Exactly permutation-invariant in the rows.
template <class S>
class DeepSet {
 public:
  DeepSet() = default;
  DeepSet(int data_dim, DeepSetConfig cfg, RandomStream& rng)
      : cfg_(cfg),
        data_dim_(data_dim),
        phi_("summary.phi", {data_dim, cfg.element_width, cfg.element_width}, rng, Activation::silu,
             Activation::silu),
        rho_("summary.rho",
             {cfg.element_width + 2 * data_dim + 1, cfg.pooled_width, cfg.pooled_width, cfg.out_dim}, rng),
        pool_scale_("summary.pool_scale", Matrix<S>::Constant(1, 1, S(0.01))),
        mean_scale_("summary.mean_scale", Matrix<S>::Ones(1, data_dim)),
        std_scale_("summary.std_scale", Matrix<S>::Ones(1, data_dim)),
        n_scale_("summary.n_scale", Matrix<S>::Constant(1, 1, S(0.01))) {}

  int out_dim() const { return cfg_.out_dim; }

  Var<S> operator()(Tape<S>& tape, std::span<const Dataset> batch) {
    const auto b = static_cast<Eigen::Index>(batch.size());
    Eigen::Index total = 0;
    std::vector<Eigen::Index> offsets{0};
    for (const auto& x : batch) {
      if (x.rows() < 1) throw ShapeError("DeepSet needs at least one row");
      if (x.cols() != data_dim_) throw ShapeError("DeepSet input has the wrong number of columns");
      total += x.rows();
      offsets.push_back(total);
    }
    Matrix<S> z(total, data_dim_);
    Matrix<S> means(b, data_dim_), stds(b, data_dim_), counts(b, 1);
    for (Eigen::Index i = 0; i < b; ++i) {
      const Dataset& x = batch[static_cast<std::size_t>(i)];
      const Eigen::RowVectorXd mu = x.colwise().mean();
      const Eigen::RowVectorXd sd =
          ((x.rowwise() - mu).array().square().colwise().mean().sqrt()).max(kStdFloor).matrix();
      z.middleRows(offsets[i], x.rows()) = ((x.rowwise() - mu).array().rowwise() / sd.array()).matrix().cast<S>();
      means.row(i) = mu.cast<S>();
      stds.row(i) = sd.cast<S>();
      counts(i, 0) = static_cast<S>(x.rows());
    }
    Var<S> pooled = ad::segment_sum(phi_(tape.constant(std::move(z))), std::move(offsets));
    const Var<S> parts[] = {pooled * tape.param(pool_scale_), tape.constant(std::move(means)) * tape.param(mean_scale_),
                            tape.constant(std::move(stds)) * tape.param(std_scale_),
                            tape.constant(std::move(counts)) * tape.param(n_scale_)};
    return rho_(ad::concat_cols<S>(parts));
  }

  void collect(ParamList<S>& out) {
    phi_.collect(out);
    rho_.collect(out);
    out.push_back(&pool_scale_);
    out.push_back(&mean_scale_);
    out.push_back(&std_scale_);
    out.push_back(&n_scale_);
  }

 private:
  DeepSetConfig cfg_;
  int data_dim_ = 0;
  Mlp<S> phi_;
  Mlp<S> rho_;
  Parameter<S> pool_scale_, mean_scale_, std_scale_, n_scale_;
};

struct BiLstmConfig {
  int lift_width = 64;  // width-1 convolution channels
  int hidden = 64;      // per direction; output is 2 * hidden
};

/// One LSTM direction with gates ordered (input, forget, cell, output).
template <class S>
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(const std::string& name, int in, int hidden, RandomStream& rng)
      : hidden_(hidden), gates_(name, in + hidden, 4 * hidden, rng) {
    gates_.bias.value.middleCols(hidden, hidden).setOnes();  // forget-gate bias
  }

  struct State {
    Var<S> h, c;
  };

  State step(Var<S> x, State s) {
    const Var<S> parts[] = {x, s.h};
    Var<S> z = gates_(ad::concat_cols<S>(parts));
    Var<S> i = ad::sigmoid(ad::slice_cols(z, 0, hidden_));
    Var<S> f = ad::sigmoid(ad::slice_cols(z, hidden_, hidden_));
    Var<S> g = ad::tanh(ad::slice_cols(z, 2 * hidden_, hidden_));
    Var<S> o = ad::sigmoid(ad::slice_cols(z, 3 * hidden_, hidden_));
    Var<S> c = f * s.c + i * g;
    return {o * ad::tanh(c), c};
  }

  int hidden() const { return hidden_; }
  Dense<S>& gates() { return gates_; }
  void collect(ParamList<S>& out) { gates_.collect(out); }

 private:
  int hidden_ = 0;
  Dense<S> gates_;
};

/// Pointwise lift followed by forward and backward LSTMs over variable-length
/// sequences. Output is [h_forward(T), h_backward(1)], the final hidden states.
template <class S>
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(int data_dim, BiLstmConfig cfg, RandomStream& rng)
      : cfg_(cfg),
        data_dim_(data_dim),
        lift_("summary.lift", data_dim, cfg.lift_width, rng),
        forward_("summary.lstm_fwd", cfg.lift_width, cfg.hidden, rng),
        backward_("summary.lstm_bwd", cfg.lift_width, cfg.hidden, rng) {}

  int out_dim() const { return 2 * cfg_.hidden; }

  Var<S> operator()(Tape<S>& tape, std::span<const Dataset> batch) {
    const auto b = static_cast<Eigen::Index>(batch.size());
    std::vector<Eigen::Index> offsets{0};
    Eigen::Index total = 0, longest = 0;
    for (const auto& x : batch) {
      if (x.rows() < 1) throw ShapeError("BiLSTM needs at least one time step");
      if (x.cols() != data_dim_) throw ShapeError("BiLSTM input has the wrong number of columns");
      total += x.rows();
      longest = std::max(longest, x.rows());
      offsets.push_back(total);
    }
    Matrix<S> stacked(total, data_dim_);
    for (Eigen::Index i = 0; i < b; ++i)
      stacked.middleRows(offsets[i], batch[static_cast<std::size_t>(i)].rows()) =
          batch[static_cast<std::size_t>(i)].template cast<S>();
    Var<S> lifted = ad::silu(lift_(tape.constant(std::move(stacked))));

    auto run = [&](LstmCell<S>& cell, bool reverse) {
      typename LstmCell<S>::State s{tape.constant(Matrix<S>::Zero(b, cell.hidden())),
                                    tape.constant(Matrix<S>::Zero(b, cell.hidden()))};
      for (Eigen::Index t = 0; t < longest; ++t) {
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(b));
        Matrix<S> mask(b, 1);
        bool all_active = true;
        for (Eigen::Index i = 0; i < b; ++i) {
          const Eigen::Index len = offsets[i + 1] - offsets[i];
          const bool active = t < len;
          // The backward pass aligns sequences by their last element.
          rows[static_cast<std::size_t>(i)] = active ? offsets[i] + (reverse ? len - 1 - t : t) : -1;
          mask(i, 0) = active ? S(1) : S(0);
          all_active = all_active && active;
        }
        auto next = cell.step(ad::gather_rows(lifted, std::move(rows)), s);
        if (all_active) {
          s = next;
        } else {
          Var<S> m = tape.constant(std::move(mask));
          s = {s.h + m * (next.h - s.h), s.c + m * (next.c - s.c)};
        }
      }
      return s.h;
    };
    const Var<S> parts[] = {run(forward_, false), run(backward_, true)};
    return ad::concat_cols<S>(parts);
  }

  void collect(ParamList<S>& out) {
    lift_.collect(out);
    forward_.collect(out);
    backward_.collect(out);
  }

  LstmCell<S>& forward_cell() { return forward_; }
  LstmCell<S>& backward_cell() { return backward_; }
  Dense<S>& lift() { return lift_; }

 private:
  BiLstmConfig cfg_;
  int data_dim_ = 0;
  Dense<S> lift_;
  LstmCell<S> forward_, backward_;
};

enum class SummaryKind { none, deepset, bilstm };

inline SummaryKind parse_summary_kind(std::string_view s) {
  if (s == "none") return SummaryKind::none;
  if (s == "deepset") return SummaryKind::deepset;
  if (s == "bilstm") return SummaryKind::bilstm;
  throw ConfigError("unknown summary network: " + std::string(s));
}

inline std::string_view to_string(SummaryKind k) {
  switch (k) {
    case SummaryKind::none: return "none";
    case SummaryKind::deepset: return "deepset";
    case SummaryKind::bilstm: return "bilstm";
  }
  return "?";
}

/// Conditioning encoder. With no summary network each dataset must have the
/// same shape and is flattened row-major into the conditioning vector.
template <class S>
class Encoder {
 public:
  Encoder() = default;
  Encoder(SummaryKind kind, int data_dim, int fixed_rows, RandomStream& rng, DeepSetConfig ds = {},
          BiLstmConfig bl = {})
      : kind_(kind), data_dim_(data_dim), fixed_rows_(fixed_rows) {
    if (kind == SummaryKind::deepset) deepset_ = DeepSet<S>(data_dim, ds, rng);
    if (kind == SummaryKind::bilstm) bilstm_ = BiLstm<S>(data_dim, bl, rng);
  }

  SummaryKind kind() const { return kind_; }

  int out_dim() const {
    switch (kind_) {
      case SummaryKind::none: return data_dim_ * fixed_rows_;
      case SummaryKind::deepset: return deepset_.out_dim();
      case SummaryKind::bilstm: return bilstm_.out_dim();
    }
    return 0;
  }

  Var<S> operator()(Tape<S>& tape, std::span<const Dataset> batch) {
    switch (kind_) {
      case SummaryKind::deepset: return deepset_(tape, batch);
      case SummaryKind::bilstm: return bilstm_(tape, batch);
      case SummaryKind::none: break;
    }
    Matrix<S> flat(static_cast<Eigen::Index>(batch.size()), out_dim());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Dataset& x = batch[i];
      if (x.rows() != fixed_rows_ || x.cols() != data_dim_)
        throw ShapeError("without a summary network every dataset must be " + std::to_string(fixed_rows_) + "x" +
                         std::to_string(data_dim_));
      for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index c = 0; c < x.cols(); ++c)
          flat(static_cast<Eigen::Index>(i), r * data_dim_ + c) = static_cast<S>(x(r, c));
    }
    return tape.constant(std::move(flat));
  }

  void collect(ParamList<S>& out) {
    if (kind_ == SummaryKind::deepset) deepset_.collect(out);
    if (kind_ == SummaryKind::bilstm) bilstm_.collect(out);
  }

 private:
  SummaryKind kind_ = SummaryKind::none;
  int data_dim_ = 0;
  int fixed_rows_ = 1;
  DeepSet<S> deepset_;
  BiLstm<S> bilstm_;
};

}  // namespace npe::nets
