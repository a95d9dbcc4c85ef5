#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "npe/core/errors.hpp"
#include "npe/core/random.hpp"

namespace npe::sim {

enum class DataKind { single, iid, sequential };

inline std::string_view to_string(DataKind k) {
  switch (k) {
    case DataKind::single: return "single";
    case DataKind::iid: return "iid";
    case DataKind::sequential: return "sequential";
  }
  return "?";
}

struct SampleRange {
  int min = 1;
  int max = 1;
};

using Hyperparams = std::map<std::string, double, std::less<>>;

struct SimulatorSpec {
  std::string name;
  int theta_dim = 0;      // preprocessed (unconstrained) dimension P
  int raw_theta_dim = 0;  // natural-unit dimension, differs for simplex-valued problems
  int data_dim = 0;       // D
  DataKind data_kind = DataKind::single;
  SampleRange n_range;
  Hyperparams hyperparams;

  void validate() const {
    if (theta_dim < 1 || raw_theta_dim < 1 || data_dim < 1)
      throw ConfigError(name + ": dimensions must be positive");
    if (n_range.min < 1 || n_range.min > n_range.max)
      throw ConfigError(name + ": invalid sample-size range");
    if (data_kind == DataKind::single && (n_range.min != 1 || n_range.max != 1))
      throw ConfigError(name + ": single-observation problems have N = 1");
  }
};

/// One prior draw. `hyper` carries hierarchical latents that are not part of
/// theta (the Dirichlet concentration vector); it is empty for most problems.
struct PriorDraw {
  Eigen::VectorXd theta;
  Eigen::VectorXd hyper;
};

/// Rows are observations (or time steps), columns the D data channels.
using Dataset = Eigen::MatrixXd;

struct InverseResult {
  Eigen::VectorXd theta;
  bool in_support = true;
};

class Simulator {
 public:
  explicit Simulator(SimulatorSpec spec) : spec_(std::move(spec)) { spec_.validate(); }
  virtual ~Simulator() = default;

  const SimulatorSpec& spec() const { return spec_; }
  const std::string& name() const { return spec_.name; }

  virtual PriorDraw sample_prior(RandomStream& rng) const = 0;

  Dataset sample_dataset(const Eigen::VectorXd& theta_raw, int n, RandomStream& rng) const {
    if (n < spec_.n_range.min || n > spec_.n_range.max)
      throw InvalidSampleSize(spec_.name + ": n=" + std::to_string(n) + " outside [" +
                              std::to_string(spec_.n_range.min) + ", " +
                              std::to_string(spec_.n_range.max) + "]");
    if (theta_raw.size() != spec_.raw_theta_dim)
      throw ShapeError(spec_.name + ": theta has wrong dimension");
    return generate(theta_raw, n, rng);
  }

  int sample_size(RandomStream& rng) const {
    return static_cast<int>(rng.uniform_int(spec_.n_range.min, spec_.n_range.max));
  }

  Eigen::VectorXd preprocess_theta(const Eigen::VectorXd& theta_raw) const {
    Eigen::VectorXd out = to_unconstrained(theta_raw);
    if (!out.allFinite()) throw PreprocessError(spec_.name + ": non-finite preprocessed theta");
    return out;
  }

  Dataset preprocess_data(const Dataset& x_raw) const {
    Dataset out = transform_data(x_raw);
    if (!out.allFinite()) throw PreprocessError(spec_.name + ": non-finite preprocessed data");
    return out;
  }

  std::pair<Eigen::VectorXd, Dataset> preprocess(const Eigen::VectorXd& theta_raw,
                                                 const Dataset& x_raw) const {
    return {preprocess_theta(theta_raw), preprocess_data(x_raw)};
  }

  /// Support violations are reported through the flag rather than clipped.
  InverseResult inverse_preprocess(const Eigen::VectorXd& theta_proc) const {
    if (theta_proc.size() != spec_.theta_dim)
      throw ShapeError(spec_.name + ": preprocessed theta has wrong dimension");
    InverseResult r;
    r.theta = from_unconstrained(theta_proc);
    r.in_support = r.theta.allFinite() && in_support(r.theta);
    return r;
  }

  virtual bool in_support(const Eigen::VectorXd& theta_raw) const = 0;
  virtual std::vector<std::string> theta_names() const = 0;

 protected:
  virtual Dataset generate(const Eigen::VectorXd& theta_raw, int n, RandomStream& rng) const = 0;
  virtual Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& raw) const { return raw; }
  virtual Eigen::VectorXd from_unconstrained(const Eigen::VectorXd& proc) const { return proc; }
  virtual Dataset transform_data(const Dataset& raw) const { return raw; }

  double hp(std::string_view key) const {
    auto it = spec_.hyperparams.find(key);
    if (it == spec_.hyperparams.end())
      throw ConfigError(spec_.name + ": missing hyperparameter " + std::string(key));
    return it->second;
  }
  int hp_int(std::string_view key) const { return static_cast<int>(std::lround(hp(key))); }

 private:
  SimulatorSpec spec_;
};

}  // namespace npe::sim
