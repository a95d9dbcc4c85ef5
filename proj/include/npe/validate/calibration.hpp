#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "npe/sim/conjugate.hpp"
#include "npe/sim/spec.hpp"
#include "npe/validate/metrics.hpp"

namespace npe::validate {

/// One calibration round: a prior draw and a dataset simulated from it.
struct CalibrationCase {
  sim::PriorDraw prior;
  sim::Dataset x_raw;
  sim::Dataset x_proc;
};

/// Maps cases to L posterior draws each, in raw parameter units (L x raw_dim).
/// A throw or a malformed result for a round marks that round as skipped.
using PosteriorSampler =
    std::function<std::vector<Eigen::MatrixXd>(std::span<const CalibrationCase>, int L, RandomStream&)>;

inline std::vector<CalibrationCase> simulate_cases(const sim::Simulator& sim, int count, RandomStream& rng) {
  std::vector<CalibrationCase> cases;
  cases.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) {
    CalibrationCase k;
    k.prior = sim.sample_prior(rng);
    k.x_raw = sim.sample_dataset(k.prior.theta, sim.sample_size(rng), rng);
    k.x_proc = sim.preprocess_data(k.x_raw);
    cases.push_back(std::move(k));
  }
  return cases;
}

/// Posterior draws for each case; empty where the round was skipped.
struct CalibrationDraws {
  std::vector<CalibrationCase> cases;
  std::vector<Eigen::MatrixXd> draws;
  int skipped = 0;
};

inline constexpr double kMaxSkippedFraction = 0.05;

inline CalibrationDraws draw_posteriors(const sim::Simulator& sim, const PosteriorSampler& sampler, int C, int L,
                                        RandomStream& rng) {
  if (C < 100 || L < 10) throw ConfigError("calibration needs C >= 100 and L >= 10");
  CalibrationDraws out;
  out.cases = simulate_cases(sim, C, rng);
  const auto valid = [&](const Eigen::MatrixXd& d) {
    return d.rows() == L && d.cols() == sim.spec().raw_theta_dim && d.allFinite();
  };
  RandomStream sampling = rng.child(1);
  std::vector<Eigen::MatrixXd> batch;
  try {
    batch = sampler(out.cases, L, sampling);
  } catch (const Error&) {
    batch.clear();
  }
  if (batch.size() != out.cases.size()) {
    // Retry round by round so one failure costs one round.
    batch.assign(out.cases.size(), Eigen::MatrixXd());
    for (std::size_t c = 0; c < out.cases.size(); ++c) {
      RandomStream round = sampling.child(c);
      try {
        auto one = sampler(std::span<const CalibrationCase>(&out.cases[c], 1), L, round);
        if (one.size() == 1) batch[c] = std::move(one.front());
      } catch (const Error&) {
      }
    }
  }
  for (auto& d : batch) {
    if (!valid(d)) {
      d.resize(0, 0);
      ++out.skipped;
    }
  }
  out.draws = std::move(batch);
  if (out.skipped > kMaxSkippedFraction * C)
    throw ValidationError(std::to_string(out.skipped) + " of " + std::to_string(C) + " calibration rounds failed");
  return out;
}

/// Per-margin rank fractions U_j = mean_l 1(theta*_j <= draw_lj) in raw units.
inline std::vector<std::vector<double>> sbc_ranks(const CalibrationDraws& d) {
  std::vector<std::vector<double>> ranks;
  for (std::size_t c = 0; c < d.cases.size(); ++c) {
    const auto& draws = d.draws[c];
    if (draws.size() == 0) continue;
    const Eigen::VectorXd& truth = d.cases[c].prior.theta;
    ranks.resize(static_cast<std::size_t>(truth.size()));
    for (Eigen::Index j = 0; j < truth.size(); ++j)
      ranks[static_cast<std::size_t>(j)].push_back((draws.col(j).array() >= truth[j]).template cast<double>().mean());
  }
  return ranks;
}

inline std::vector<std::vector<double>> sbc_ranks(const sim::Simulator& sim, const PosteriorSampler& sampler, int C,
                                                  int L, RandomStream& rng) {
  return sbc_ranks(draw_posteriors(sim, sampler, C, L, rng));
}

/// TARP statistics in preprocessed space. Each reference point is uniform over
/// the bounding box of the C true parameters; U is the fraction of draws closer
/// to the reference than the true parameter is.
inline std::vector<double> tarp_statistics(const sim::Simulator& sim, const CalibrationDraws& d, RandomStream& rng) {
  const int p = sim.spec().theta_dim;
  std::vector<Eigen::VectorXd> truth;
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = -lo;
  for (const auto& k : d.cases) {
    truth.push_back(sim.preprocess_theta(k.prior.theta));
    lo = lo.cwiseMin(truth.back());
    hi = hi.cwiseMax(truth.back());
  }
  std::vector<double> u;
  for (std::size_t c = 0; c < d.cases.size(); ++c) {
    Eigen::VectorXd ref(p);
    for (int j = 0; j < p; ++j) ref[j] = rng.uniform(lo[j], hi[j]);
    if (d.draws[c].size() == 0) continue;
    const double radius = (truth[c] - ref).norm();
    int inside = 0;
    for (Eigen::Index l = 0; l < d.draws[c].rows(); ++l) {
      // A draw outside the support has no preprocessed image and counts as outside the ball.
      try {
        inside += (sim.preprocess_theta(d.draws[c].row(l).transpose()) - ref).norm() < radius;
      } catch (const PreprocessError&) {
      }
    }
    u.push_back(static_cast<double>(inside) / static_cast<double>(d.draws[c].rows()));
  }
  return u;
}

struct TarpResult {
  std::vector<double> u;
  std::vector<std::pair<double, double>> coverage;
};

inline TarpResult tarp_coverage(const sim::Simulator& sim, const PosteriorSampler& sampler, int C, int L,
                                RandomStream& rng) {
  const auto d = draw_posteriors(sim, sampler, C, L, rng);
  RandomStream ref = rng.child(2);
  TarpResult r{tarp_statistics(sim, d, ref), {}};
  r.coverage = coverage_curve(r.u);
  return r;
}

struct CalibrationReport {
  std::vector<std::vector<double>> per_margin_ranks;
  std::vector<double> tarp_u;
  std::vector<double> margin_wd;
  double wd_avg = 0.0;
  double wd_worst = 0.0;
  double tv = 0.0;         // mean over margins
  double hellinger = 0.0;  // mean over margins
  double ecp = 0.0;
  std::vector<std::pair<double, double>> coverage_curve;
  int skipped = 0;
};

inline CalibrationReport make_report(std::vector<std::vector<double>> ranks, std::vector<double> tarp_u,
                                     int skipped = 0) {
  if (ranks.empty()) throw EmptyReport("no SBC margins to summarize");
  CalibrationReport r;
  for (const auto& margin : ranks) {
    const auto d = dist_to_uniform(margin);
    r.margin_wd.push_back(d.wd);
    r.wd_avg += d.wd / static_cast<double>(ranks.size());
    r.wd_worst = std::max(r.wd_worst, d.wd);
    r.tv += d.tv / static_cast<double>(ranks.size());
    r.hellinger += d.hellinger / static_cast<double>(ranks.size());
  }
  r.ecp = ecp_score(tarp_u);
  r.coverage_curve = coverage_curve(tarp_u);
  r.per_margin_ranks = std::move(ranks);
  r.tarp_u = std::move(tarp_u);
  r.skipped = skipped;
  return r;
}

/// SBC and TARP from one shared set of calibration rounds.
inline CalibrationReport calibrate(const sim::Simulator& sim, const PosteriorSampler& sampler, int C, int L,
                                   RandomStream& rng) {
  const auto d = draw_posteriors(sim, sampler, C, L, rng);
  RandomStream ref = rng.child(2);
  return make_report(sbc_ranks(d), tarp_statistics(sim, d, ref), d.skipped);
}

/// Exact conjugate posterior as a sampler. With `dispersion` != 1 each draw is
/// pushed away from the posterior mean (estimated from 1000 extra draws) by that factor.
inline PosteriorSampler oracle_sampler(const sim::Simulator& sim, double dispersion = 1.0) {
  if (!sim::has_oracle(sim.name())) throw NoOracle(sim.name() + " has no conjugate posterior");
  return [&sim, dispersion](std::span<const CalibrationCase> cases, int L, RandomStream& rng) {
    std::vector<Eigen::MatrixXd> out;
    for (const auto& k : cases) {
      const auto post = sim::conjugate_posterior(sim, k.x_raw, k.prior.hyper);
      Eigen::MatrixXd draws(L, sim.spec().raw_theta_dim);
      for (int l = 0; l < L; ++l) draws.row(l) = post.sample(rng).transpose();
      if (dispersion != 1.0) {
        Eigen::RowVectorXd centre = Eigen::RowVectorXd::Zero(draws.cols());
        for (int m = 0; m < 1000; ++m) centre += post.sample(rng).transpose() / 1000.0;
        draws = ((draws.rowwise() - centre) * dispersion).rowwise() + centre;
      }
      out.push_back(std::move(draws));
    }
    return out;
  };
}

}  // namespace npe::validate
