#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "npe/harness/checkpoint.hpp"
#include "npe/harness/model.hpp"

namespace npe::harness {

/// One row of metrics.csv. `loss` averages the training losses since the
/// previous row; `wall_s` is the mean wall time per training batch over that span.
struct MetricsRow {
  long batch = 0;
  double loss = 0.0;
  double sbc_wd_avg = 0.0;
  double sbc_wd_worst = 0.0;
  double sbc_tv = 0.0;
  double sbc_hellinger = 0.0;
  double ecp = 0.0;
  double wall_s = 0.0;
};

inline constexpr const char* kMetricsHeader = "batch,loss,sbc_wd_avg,sbc_wd_worst,sbc_tv,sbc_hellinger,ecp,wall_s";

inline std::string format_metrics_row(const MetricsRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%ld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.6g", r.batch, r.loss, r.sbc_wd_avg,
                r.sbc_wd_worst, r.sbc_tv, r.sbc_hellinger, r.ecp, r.wall_s);
  return buf;
}

/// Random streams of a run, all derived from its seed so they never interact.
struct RunStreams {
  RandomStream init;
  RandomStream train;
  RandomStream eval;  // copied afresh for every evaluation

  explicit RunStreams(std::uint64_t seed)
      : init(RandomStream::derive(seed, 0)), train(RandomStream::derive(seed, 1)), eval(RandomStream::derive(seed, 2)) {}
};

inline nlohmann::json report_json(const validate::CalibrationReport& r) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& [level, frac] : r.coverage_curve) curve.push_back({level, frac});
  return {{"wd_avg", r.wd_avg},       {"wd_worst", r.wd_worst}, {"tv", r.tv},
          {"hellinger", r.hellinger}, {"ecp", r.ecp},           {"margin_wd", r.margin_wd},
          {"skipped", r.skipped},     {"coverage_curve", curve}};
}

struct RunResult {
  std::vector<MetricsRow> rows;
  validate::CalibrationReport final_report;
  Eigen::Index parameter_count = 0;
  long instability_warnings = 0;
};

/// SBC and TARP on a fixed evaluation stream, so every evaluation of a run sees
/// the same calibration datasets.
inline validate::CalibrationReport evaluate(Model& model, const sim::Simulator& sim, const RunConfig& cfg,
                                            const RandomStream& eval) {
  RandomStream rng = eval;
  return validate::calibrate(sim, model_sampler(model, sim), cfg.C, cfg.L, rng);
}

/// Trains one model, evaluating every `eval_every` batches and after the last.
/// Writes metrics.csv (one flushed row per evaluation), report.json,
/// coverage_curve.json and checkpoint/ under `out_dir`.
inline RunResult run_training(const RunConfig& cfg, const std::filesystem::path& out_dir,
                              std::ostream* progress = nullptr) {
  const auto sim = cfg.make_simulator();
  cfg.validate(sim->spec());
  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir / "metrics.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write " + (out_dir / "metrics.csv").string());
  csv << kMetricsHeader << '\n' << std::flush;

  RunStreams streams(cfg.seed);
  Model model(cfg, *sim, streams.init);
  RunResult result;
  result.parameter_count = nets::parameter_count(model.parameters());

  double loss_sum = 0.0;
  double seconds = 0.0;
  long since = 0;
  for (long batch = 1; batch <= cfg.training_batches; ++batch) {
    const auto t0 = std::chrono::steady_clock::now();
    loss_sum += model.train_step(*sim, streams.train);
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ++since;
    if (batch % cfg.eval_every != 0 && batch != cfg.training_batches) continue;
    result.final_report = evaluate(model, *sim, cfg, streams.eval);
    const auto& r = result.final_report;
    MetricsRow row{batch, loss_sum / since, r.wd_avg, r.wd_worst, r.tv, r.hellinger, r.ecp, seconds / since};
    csv << format_metrics_row(row) << '\n' << std::flush;
    if (progress)
      *progress << cfg.problem << " " << to_string(cfg.decoder) << " seed " << cfg.seed << ": " << format_metrics_row(row)
                << std::endl;
    result.rows.push_back(row);
    loss_sum = seconds = 0.0;
    since = 0;
  }
  result.instability_warnings = model.instability_warnings();

  CheckpointState state{to_json(cfg), streams.train.state(), model.steps()};
  save_checkpoint(out_dir / "checkpoint", model.parameters(), state);

  nlohmann::json report = report_json(result.final_report);
  report["problem"] = cfg.problem;
  report["decoder"] = to_string(cfg.decoder);
  report["seed"] = cfg.seed;
  report["parameter_count"] = result.parameter_count;
  report["config"] = to_json(cfg);
  std::ofstream(out_dir / "report.json") << report.dump(2) << '\n';
  std::ofstream(out_dir / "coverage_curve.json") << report.at("coverage_curve").dump() << '\n';
  return result;
}

/// Rebuilds the model described by a checkpoint's config snapshot and loads its weights.
struct LoadedModel {
  RunConfig config;
  std::unique_ptr<sim::Simulator> simulator;
  std::unique_ptr<Model> model;
  CheckpointState state;
};

inline RunConfig config_from_json(const nlohmann::json& j);

inline LoadedModel load_model(const std::filesystem::path& checkpoint_dir) {
  nlohmann::json manifest;
  {
    std::ifstream is(checkpoint_dir / kManifestFile);
    if (!is) throw CorruptCheckpoint("missing " + (checkpoint_dir / kManifestFile).string());
    try {
      manifest = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
      throw CorruptCheckpoint("unreadable manifest: " + std::string(e.what()));
    }
  }
  LoadedModel out;
  out.config = config_from_json(manifest.value("config", nlohmann::json::object()));
  out.simulator = out.config.make_simulator();
  RunStreams streams(out.config.seed);
  out.model = std::make_unique<Model>(out.config, *out.simulator, streams.init);
  out.state = load_checkpoint(checkpoint_dir, out.model->parameters());
  out.model->set_steps(out.state.step);
  return out;
}

/// Inverse of to_json(RunConfig), routed through the TOML reader so both paths
/// share one set of checks.
inline RunConfig config_from_json(const nlohmann::json& j) {
  const std::function<toml::table(const nlohmann::json&)> table = [&](const nlohmann::json& obj) {
    toml::table t;
    for (const auto& [k, v] : obj.items()) {
      if (v.is_null()) continue;
      if (v.is_object())
        t.insert(k, table(v));
      else if (v.is_boolean())
        t.insert(k, v.get<bool>());
      else if (v.is_number_integer())
        t.insert(k, v.get<std::int64_t>());
      else if (v.is_number())
        t.insert(k, v.get<double>());
      else if (v.is_string())
        t.insert(k, v.get<std::string>());
      else
        throw ConfigError("unsupported value for " + k + " in config snapshot");
    }
    return t;
  };
  if (!j.is_object()) throw ConfigError("config snapshot is not an object");
  return parse_run_config(table(j));
}

}  // namespace npe::harness
