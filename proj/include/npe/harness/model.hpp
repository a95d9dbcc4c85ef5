#pragma once

#include <memory>
#include <variant>

#include "npe/diffusion/denoiser.hpp"
#include "npe/flow/coupling.hpp"
#include "npe/harness/config.hpp"
#include "npe/nets/train.hpp"
#include "npe/validate/calibration.hpp"

namespace npe::harness {

using DiffusionPosterior = nets::Posterior<float, diffusion::Denoiser<float>>;
using FlowPosterior = nets::Posterior<float, flow::FlowModel<float>>;

/// Summary network plus whichever decoder the run config selects, trained in f32.
class Model {
 public:
  Model(const RunConfig& cfg, const sim::Simulator& sim, RandomStream& init) : cfg_(cfg) {
    const auto& spec = sim.spec();
    cfg.validate(spec);
    nets::Encoder<float> enc(cfg.summary_kind(spec), spec.data_dim, 1, init, cfg.deepset, cfg.bilstm);
    const int k = enc.out_dim();
    if (cfg.decoder == DecoderKind::cdiff)
      impl_ = std::make_unique<DiffusionPosterior>(
          std::move(enc), diffusion::Denoiser<float>(spec.theta_dim, k, cfg.edm, cfg.denoiser, init), cfg.optimizer);
    else
      impl_ = std::make_unique<FlowPosterior>(std::move(enc), flow::FlowModel<float>(spec.theta_dim, k, cfg.flow, init),
                                              cfg.optimizer);
  }

  /// One optimizer step on a fresh simulated batch; applies the configured schedule.
  double train_step(const sim::Simulator& sim, RandomStream& rng) {
    return std::visit(
        [&](auto& p) {
          if (cfg_.lr_schedule == LrSchedule::cosine)
            p->optimizer().set_learning_rate(
                nets::cosine_learning_rate(cfg_.optimizer.lr, p->optimizer().steps(), cfg_.training_batches));
          return p->train_step(sim, cfg_.batch_size, rng);
        },
        impl_);
  }

  /// `count` preprocessed-space draws per dataset (datasets already preprocessed).
  std::vector<Eigen::MatrixXd> sample(std::span<const sim::Dataset> data, int count, RandomStream& rng) {
    return std::visit([&](auto& p) { return p->sample(data, count, rng); }, impl_);
  }

  nets::ParamList<float> parameters() {
    return std::visit([](auto& p) { return p->parameters(); }, impl_);
  }

  long steps() const {
    return std::visit([](const auto& p) { return p->optimizer().steps(); }, impl_);
  }

  void set_steps(long s) {
    std::visit([s](auto& p) { p->optimizer().set_steps(s); }, impl_);
  }

  long instability_warnings() const {
    return std::visit([](const auto& p) { return p->instability_warnings(); }, impl_);
  }

  const RunConfig& config() const { return cfg_; }

 private:
  RunConfig cfg_;
  std::variant<std::unique_ptr<DiffusionPosterior>, std::unique_ptr<FlowPosterior>> impl_;
};

/// Maps preprocessed draws (rows) to raw units; rows without a finite image become NaN.
inline Eigen::MatrixXd to_raw(const sim::Simulator& sim, const Eigen::MatrixXd& proc) {
  Eigen::MatrixXd raw(proc.rows(), sim.spec().raw_theta_dim);
  for (Eigen::Index l = 0; l < proc.rows(); ++l) {
    const auto r = sim.inverse_preprocess(proc.row(l).transpose());
    if (r.theta.allFinite())
      raw.row(l) = r.theta.transpose();
    else
      raw.row(l).setConstant(std::numeric_limits<double>::quiet_NaN());
  }
  return raw;
}

/// Adapts a model to the calibration interface: draws are mapped back to raw units.
inline validate::PosteriorSampler model_sampler(Model& model, const sim::Simulator& sim) {
  return [&model, &sim](std::span<const validate::CalibrationCase> cases, int L, RandomStream& rng) {
    std::vector<sim::Dataset> data;
    data.reserve(cases.size());
    for (const auto& k : cases) data.push_back(k.x_proc);
    const auto proc = model.sample(data, L, rng);
    std::vector<Eigen::MatrixXd> out;
    out.reserve(proc.size());
    for (const auto& d : proc) out.push_back(to_raw(sim, d));
    return out;
  };
}

}  // namespace npe::harness
