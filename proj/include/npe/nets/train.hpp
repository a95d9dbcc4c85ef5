#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <span>
#include <vector>

#include "npe/nets/optim.hpp"
#include "npe/nets/summary.hpp"
#include "npe/sim/spec.hpp"

namespace npe::nets {

/// B independent (theta, X) pairs, both preprocessed. Row i of `theta` pairs with data[i].
struct TrainingBatch {
  Eigen::MatrixXd theta;
  std::vector<Dataset> data;
};

/// Each pair draws its own theta and its own sample size N.
inline TrainingBatch simulate_batch(const sim::Simulator& sim, int batch_size, RandomStream& rng) {
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  TrainingBatch out;
  out.theta.resize(batch_size, sim.spec().theta_dim);
  out.data.reserve(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) {
    const auto draw = sim.sample_prior(rng);
    const int n = sim.sample_size(rng);
    auto [theta, x] = sim.preprocess(draw.theta, sim.sample_dataset(draw.theta, n, rng));
    out.theta.row(i) = theta.transpose();
    out.data.push_back(std::move(x));
  }
  return out;
}

/// Requirements on a conditional decoder trained jointly with an Encoder.
template <class D, class S>
concept ConditionalDecoder = requires(D d, Tape<S>& tape, const Eigen::MatrixXd& theta, Var<S> cond,
                                      const Matrix<S>& cond_rows, RandomStream& rng, ParamList<S>& out) {
  { d.loss(tape, theta, cond, rng) } -> std::same_as<Var<S>>;
  { d.sample(cond_rows, rng) } -> std::same_as<Eigen::MatrixXd>;
  d.collect(out);
};

/// Summary network and decoder with one optimizer over both parameter sets.
template <class S, class Decoder>
  requires ConditionalDecoder<Decoder, S>
class Posterior {
 public:
  Posterior(Encoder<S> encoder, Decoder decoder, AdamConfig adam = {})
      : encoder_(std::move(encoder)), decoder_(std::move(decoder)), optimizer_(adam) {}

  Posterior(const Posterior&) = delete;
  Posterior& operator=(const Posterior&) = delete;

  Encoder<S>& encoder() { return encoder_; }
  Decoder& decoder() { return decoder_; }
  Adam<S>& optimizer() { return optimizer_; }

  /// Summary parameters first, then decoder parameters. Pointers stay valid
  /// for the lifetime of this object.
  ParamList<S> parameters() {
    ParamList<S> out;
    encoder_.collect(out);
    decoder_.collect(out);
    return out;
  }

  Var<S> loss(Tape<S>& tape, const TrainingBatch& batch, RandomStream& rng) {
    if (static_cast<std::size_t>(batch.theta.rows()) != batch.data.size())
      throw ShapeError("batch has mismatched theta and data counts");
    Var<S> cond = encoder_(tape, batch.data);
    return decoder_.loss(tape, batch.theta, cond, rng);
  }

  /// One joint gradient step; returns the batch loss before the update.
  double train_step(const TrainingBatch& batch, RandomStream& rng) {
    const ParamList<S> params = parameters();
    zero_grads(params);
    Tape<S> tape;
    Var<S> l = loss(tape, batch, rng);
    const double value = static_cast<double>(l.value()(0, 0));
    if (!std::isfinite(value)) throw NumericsError("training loss is not finite");
    tape.backward(l);
    optimizer_.step(params);
    track(value);
    return value;
  }

  double train_step(const sim::Simulator& sim, int batch_size, RandomStream& rng) {
    return train_step(simulate_batch(sim, batch_size, rng), rng);
  }

  /// Conditioning rows for a set of datasets, computed without gradients.
  Matrix<S> summarize(std::span<const Dataset> data) {
    Tape<S> tape(false);
    return encoder_(tape, data).value();
  }

  /// `count` draws (preprocessed space) per dataset, in dataset order. Decoder
  /// passes are chunked to bound the size of intermediate activations.
  std::vector<Eigen::MatrixXd> sample(std::span<const Dataset> data, int count, RandomStream& rng) {
    if (count < 1) throw ConfigError("sample count must be positive");
    const std::size_t per_chunk = std::max<std::size_t>(1, kMaxSampleRows / static_cast<std::size_t>(count));
    std::vector<Eigen::MatrixXd> out;
    out.reserve(data.size());
    for (std::size_t start = 0; start < data.size(); start += per_chunk) {
      const auto part = data.subspan(start, std::min(per_chunk, data.size() - start));
      const Matrix<S> cond = summarize(part);
      const auto m = static_cast<Eigen::Index>(part.size());
      Matrix<S> rows(m * count, cond.cols());
      for (Eigen::Index i = 0; i < m; ++i) rows.middleRows(i * count, count) = cond.row(i).replicate(count, 1);
      const Eigen::MatrixXd draws = decoder_.sample(rows, rng);
      for (Eigen::Index i = 0; i < m; ++i) out.emplace_back(draws.middleRows(i * count, count));
    }
    return out;
  }

  Eigen::MatrixXd sample(const Dataset& x, int count, RandomStream& rng) {
    return sample(std::span<const Dataset>(&x, 1), count, rng).front();
  }

  /// Steps whose loss exceeded 100x the running average.
  long instability_warnings() const { return warnings_; }

 private:
  void track(double value) {
    // The ratio test only makes sense for positive losses (flow NLL can be negative).
    if (tracked_ && running_ > 0 && value > 100.0 * running_) {
      ++warnings_;
      std::clog << "warning: loss " << value << " is over 100x the running average " << running_ << " at step "
                << optimizer_.steps() << '\n';
    }
    running_ = tracked_ ? 0.99 * running_ + 0.01 * value : value;
    tracked_ = true;
  }

  static constexpr std::size_t kMaxSampleRows = 8192;

  Encoder<S> encoder_;
  Decoder decoder_;
  Adam<S> optimizer_;
  double running_ = 0.0;
  bool tracked_ = false;
  long warnings_ = 0;
};

}  // namespace npe::nets
