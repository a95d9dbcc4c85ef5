#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>
#include <toml.hpp>

#include "npe/diffusion/denoiser.hpp"
#include "npe/flow/coupling.hpp"
#include "npe/nets/optim.hpp"
#include "npe/nets/summary.hpp"
#include "npe/sim/registry.hpp"

namespace npe::harness {

enum class DecoderKind { cdiff, cnf };

inline DecoderKind parse_decoder_kind(std::string_view s) {
  if (s == "cdiff") return DecoderKind::cdiff;
  if (s == "cnf") return DecoderKind::cnf;
  throw ConfigError("unknown decoder: " + std::string(s) + " (expected cdiff or cnf)");
}

inline std::string_view to_string(DecoderKind k) { return k == DecoderKind::cdiff ? "cdiff" : "cnf"; }

enum class LrSchedule { constant, cosine };

inline LrSchedule parse_lr_schedule(std::string_view s) {
  if (s == "constant") return LrSchedule::constant;
  if (s == "cosine") return LrSchedule::cosine;
  throw ConfigError("unknown learning-rate schedule: " + std::string(s));
}

inline std::string_view to_string(LrSchedule s) { return s == LrSchedule::constant ? "constant" : "cosine"; }

struct RunConfig {
  std::string problem = "gaussian_toy";
  sim::Hyperparams hyperparams;  // overrides of the registered defaults
  DecoderKind decoder = DecoderKind::cdiff;
  std::optional<nets::SummaryKind> summary;  // unset: chosen from the problem's data kind
  std::uint64_t seed = 0;
  int training_batches = 5000;
  int batch_size = 128;
  int eval_every = 1000;
  int C = 1000;
  int L = 100;
  int repeats = 3;
  diffusion::EdmConfig edm;
  diffusion::DenoiserConfig denoiser;
  flow::FlowConfig flow;
  nets::DeepSetConfig deepset;
  nets::BiLstmConfig bilstm;
  nets::AdamConfig optimizer;
  LrSchedule lr_schedule = LrSchedule::constant;
  std::filesystem::path output_dir = "out";

  nets::SummaryKind summary_kind(const sim::SimulatorSpec& spec) const {
    if (summary) return *summary;
    switch (spec.data_kind) {
      case sim::DataKind::single: return nets::SummaryKind::none;
      case sim::DataKind::iid: return nets::SummaryKind::deepset;
      case sim::DataKind::sequential: return nets::SummaryKind::bilstm;
    }
    return nets::SummaryKind::none;
  }

  void validate(const sim::SimulatorSpec& spec) const {
    if (training_batches < 1 || batch_size < 1 || eval_every < 1 || C < 1 || L < 1 || repeats < 1)
      throw ConfigError("all sizes must be positive");
    if (summary == nets::SummaryKind::none && spec.data_kind != sim::DataKind::single)
      throw ConfigError(problem + " has variable-size data and needs a summary network");
    edm.validate();
    if (denoiser.hidden_width < 1 || denoiser.hidden_layers < 1 || denoiser.embed_dim < 2 ||
        denoiser.embed_dim % 2 != 0)
      throw ConfigError("invalid denoiser widths");
    if (flow.n_flows < 1 || flow.hidden_width < 1 || flow.hidden_layers < 1 || !(flow.alpha > 0))
      throw ConfigError("invalid flow settings");
    if (deepset.element_width < 1 || deepset.pooled_width < 1 || deepset.out_dim < 1 || bilstm.hidden < 1 ||
        bilstm.lift_width < 1)
      throw ConfigError("invalid summary network widths");
    if (!(optimizer.lr > 0) || !(optimizer.beta1 >= 0 && optimizer.beta1 < 1) ||
        !(optimizer.beta2 >= 0 && optimizer.beta2 < 1) || !(optimizer.eps > 0))
      throw ConfigError("invalid optimizer settings");
  }

  std::unique_ptr<sim::Simulator> make_simulator() const { return sim::make_simulator(problem, hyperparams); }
};

namespace detail {

inline void reject_unknown(const toml::table& t, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, node] : t)
    if (!known.contains(std::string(key.str())))
      throw ConfigError("unknown key '" + std::string(key.str()) + "' in " + where);
}

template <class T>
void read(const toml::table& t, std::string_view key, T& out, const std::string& where) {
  const toml::node* n = t.get(key);
  if (!n) return;
  if constexpr (std::is_same_v<T, bool>) {
    if (!n->is_boolean()) throw ConfigError(where + "." + std::string(key) + " must be a boolean");
    out = n->as_boolean()->get();
  } else if constexpr (std::is_integral_v<T>) {
    if (!n->is_integer()) throw ConfigError(where + "." + std::string(key) + " must be an integer");
    const std::int64_t v = n->as_integer()->get();
    if (std::is_unsigned_v<T> && v < 0) throw ConfigError(where + "." + std::string(key) + " must be non-negative");
    out = static_cast<T>(v);
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!n->is_number()) throw ConfigError(where + "." + std::string(key) + " must be a number");
    out = n->is_integer() ? static_cast<double>(n->as_integer()->get()) : n->as_floating_point()->get();
  } else {
    if (!n->is_string()) throw ConfigError(where + "." + std::string(key) + " must be a string");
    out = n->as_string()->get();
  }
}

inline const toml::table* subtable(const toml::table& t, std::string_view key) {
  const toml::node* n = t.get(key);
  if (!n) return nullptr;
  if (!n->is_table()) throw ConfigError("'" + std::string(key) + "' must be a table");
  return n->as_table();
}

}  // namespace detail

/// `problem` is either a name or a table {name, hyperparams}.
inline RunConfig parse_run_config(const toml::table& root) {
  using detail::read;
  RunConfig c;
  detail::reject_unknown(root,
                         {"problem", "decoder", "summary", "seed", "training_batches", "batch_size", "eval_every", "C",
                          "L", "repeats", "output_dir", "edm", "denoiser", "flow", "deepset", "bilstm", "optimizer"},
                         "run config");
  if (const toml::node* p = root.get("problem")) {
    if (p->is_string()) {
      c.problem = p->as_string()->get();
    } else if (p->is_table()) {
      const toml::table& t = *p->as_table();
      detail::reject_unknown(t, {"name", "hyperparams"}, "[problem]");
      read(t, "name", c.problem, "problem");
      if (const auto* h = detail::subtable(t, "hyperparams")) {
        for (const auto& [key, node] : *h) {
          if (!node.is_number()) throw ConfigError("hyperparameter " + std::string(key.str()) + " must be numeric");
          c.hyperparams[std::string(key.str())] =
              node.is_integer() ? static_cast<double>(node.as_integer()->get()) : node.as_floating_point()->get();
        }
      }
    } else {
      throw ConfigError("problem must be a name or a table");
    }
  }
  std::string text;
  if (root.get("decoder")) {
    read(root, "decoder", text, "run config");
    c.decoder = parse_decoder_kind(text);
  }
  if (root.get("summary")) {
    read(root, "summary", text, "run config");
    c.summary = nets::parse_summary_kind(text);
  }
  std::int64_t seed = 0;
  if (root.get("seed")) {
    read(root, "seed", seed, "run config");
    if (seed < 0) throw ConfigError("seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(seed);
  }
  read(root, "training_batches", c.training_batches, "run config");
  read(root, "batch_size", c.batch_size, "run config");
  read(root, "eval_every", c.eval_every, "run config");
  read(root, "C", c.C, "run config");
  read(root, "L", c.L, "run config");
  read(root, "repeats", c.repeats, "run config");
  if (root.get("output_dir")) {
    read(root, "output_dir", text, "run config");
    c.output_dir = text;
  }
  if (const auto* t = detail::subtable(root, "edm")) {
    detail::reject_unknown(*t, {"sigma_data", "sigma_min", "sigma_max", "rho", "n_steps", "p_mean", "p_std",
                                "sqrt_c_in", "scaled_init"},
                           "[edm]");
    read(*t, "sigma_data", c.edm.sigma_data, "edm");
    read(*t, "sigma_min", c.edm.sigma_min, "edm");
    read(*t, "sigma_max", c.edm.sigma_max, "edm");
    read(*t, "rho", c.edm.rho, "edm");
    read(*t, "n_steps", c.edm.n_steps, "edm");
    read(*t, "p_mean", c.edm.p_mean, "edm");
    read(*t, "p_std", c.edm.p_std, "edm");
    read(*t, "sqrt_c_in", c.edm.sqrt_c_in, "edm");
    read(*t, "scaled_init", c.edm.scaled_init, "edm");
  }
  if (const auto* t = detail::subtable(root, "denoiser")) {
    detail::reject_unknown(*t, {"hidden_width", "hidden_layers", "embed_dim"}, "[denoiser]");
    read(*t, "hidden_width", c.denoiser.hidden_width, "denoiser");
    read(*t, "hidden_layers", c.denoiser.hidden_layers, "denoiser");
    read(*t, "embed_dim", c.denoiser.embed_dim, "denoiser");
  }
  if (const auto* t = detail::subtable(root, "flow")) {
    detail::reject_unknown(*t, {"n_flows", "alpha", "clamp", "hidden_width", "hidden_layers"}, "[flow]");
    read(*t, "n_flows", c.flow.n_flows, "flow");
    read(*t, "alpha", c.flow.alpha, "flow");
    read(*t, "hidden_width", c.flow.hidden_width, "flow");
    read(*t, "hidden_layers", c.flow.hidden_layers, "flow");
    if (t->get("clamp")) {
      read(*t, "clamp", text, "flow");
      c.flow.clamp = flow::parse_soft_clamp(text);
    }
  }
  if (const auto* t = detail::subtable(root, "deepset")) {
    detail::reject_unknown(*t, {"element_width", "pooled_width", "out_dim"}, "[deepset]");
    read(*t, "element_width", c.deepset.element_width, "deepset");
    read(*t, "pooled_width", c.deepset.pooled_width, "deepset");
    read(*t, "out_dim", c.deepset.out_dim, "deepset");
  }
  if (const auto* t = detail::subtable(root, "bilstm")) {
    detail::reject_unknown(*t, {"lift_width", "hidden"}, "[bilstm]");
    read(*t, "lift_width", c.bilstm.lift_width, "bilstm");
    read(*t, "hidden", c.bilstm.hidden, "bilstm");
  }
  if (const auto* t = detail::subtable(root, "optimizer")) {
    detail::reject_unknown(*t, {"lr", "beta1", "beta2", "eps", "schedule"}, "[optimizer]");
    read(*t, "lr", c.optimizer.lr, "optimizer");
    read(*t, "beta1", c.optimizer.beta1, "optimizer");
    read(*t, "beta2", c.optimizer.beta2, "optimizer");
    read(*t, "eps", c.optimizer.eps, "optimizer");
    if (t->get("schedule")) {
      read(*t, "schedule", text, "optimizer");
      c.lr_schedule = parse_lr_schedule(text);
    }
  }
  // Resolves the problem now so a bad name or hyperparameter fails at load time.
  const auto sim = c.make_simulator();
  c.validate(sim->spec());
  return c;
}

inline RunConfig parse_run_config(std::string_view toml_text) {
  try {
    return parse_run_config(toml::parse(toml_text));
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string("malformed TOML: ") + e.what());
  }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return parse_run_config(toml::parse_file(path.string()));
  } catch (const toml::parse_error& e) {
    throw ConfigError(path.string() + ": " + std::string(e.description()));
  }
}

/// Snapshot stored alongside checkpoints and reports; keys mirror the TOML layout.
inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json hyper = nlohmann::json::object();
  for (const auto& [k, v] : c.hyperparams) hyper[k] = v;
  return {
      {"problem", {{"name", c.problem}, {"hyperparams", hyper}}},
      {"decoder", std::string(to_string(c.decoder))},
      {"summary", c.summary ? nlohmann::json(std::string(nets::to_string(*c.summary))) : nlohmann::json(nullptr)},
      {"seed", c.seed},
      {"training_batches", c.training_batches},
      {"batch_size", c.batch_size},
      {"eval_every", c.eval_every},
      {"C", c.C},
      {"L", c.L},
      {"repeats", c.repeats},
      {"output_dir", c.output_dir.string()},
      {"edm",
       {{"sigma_data", c.edm.sigma_data},
        {"sigma_min", c.edm.sigma_min},
        {"sigma_max", c.edm.sigma_max},
        {"rho", c.edm.rho},
        {"n_steps", c.edm.n_steps},
        {"p_mean", c.edm.p_mean},
        {"p_std", c.edm.p_std},
        {"sqrt_c_in", c.edm.sqrt_c_in},
        {"scaled_init", c.edm.scaled_init}}},
      {"denoiser",
       {{"hidden_width", c.denoiser.hidden_width},
        {"hidden_layers", c.denoiser.hidden_layers},
        {"embed_dim", c.denoiser.embed_dim}}},
      {"flow",
       {{"n_flows", c.flow.n_flows},
        {"alpha", c.flow.alpha},
        {"clamp", c.flow.clamp == flow::SoftClamp::tanh ? "tanh" : "atan"},
        {"hidden_width", c.flow.hidden_width},
        {"hidden_layers", c.flow.hidden_layers}}},
      {"deepset",
       {{"element_width", c.deepset.element_width},
        {"pooled_width", c.deepset.pooled_width},
        {"out_dim", c.deepset.out_dim}}},
      {"bilstm", {{"lift_width", c.bilstm.lift_width}, {"hidden", c.bilstm.hidden}}},
      {"optimizer",
       {{"lr", c.optimizer.lr},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"eps", c.optimizer.eps},
        {"schedule", std::string(to_string(c.lr_schedule))}}},
  };
}

}  // namespace npe::harness
