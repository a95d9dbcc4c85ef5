// Command-line front end: train, sample, validate, benchmark, report, simulate.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "npe/core/allocator.hpp"
#include "npe/harness/benchmark.hpp"
#include "npe/harness/dataset_io.hpp"
#include "npe/harness/exit_code.hpp"

namespace fs = std::filesystem;
using namespace npe;
using namespace npe::harness;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool config_required) {
  auto* c = cmd->add_option("--config", o.config, "run configuration (TOML)");
  if (config_required) c->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "overrides the configured seed");
  cmd->add_option("--out", o.out, "output location");
}

RunConfig resolve(const CommonOptions& o) {
  RunConfig cfg = load_run_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  return cfg;
}

void print_report(const validate::CalibrationReport& r, bool sbc, bool tarp) {
  if (sbc) {
    std::printf("sbc  wd_avg %.6f  wd_worst %.6f  tv %.6f  hellinger %.6f\n", r.wd_avg, r.wd_worst, r.tv, r.hellinger);
    for (std::size_t j = 0; j < r.margin_wd.size(); ++j) std::printf("     margin %zu wd %.6f\n", j, r.margin_wd[j]);
  }
  if (tarp) std::printf("tarp ecp %.6f\n", r.ecp);
  if (r.skipped) std::printf("skipped rounds: %d\n", r.skipped);
}

int cmd_train(const CommonOptions& o) {
  const RunConfig cfg = resolve(o);
  const auto result = run_training(cfg, cfg.output_dir, &std::cout);
  std::printf("parameters: %lld\n", static_cast<long long>(result.parameter_count));
  print_report(result.final_report, true, true);
  return kExitOk;
}

int cmd_benchmark(const CommonOptions& o) {
  const RunConfig cfg = resolve(o);
  run_benchmark(cfg, cfg.output_dir, &std::cout);
  return kExitOk;
}

int cmd_report(const CommonOptions& o) {
  const fs::path root = o.out.empty() ? fs::path(".") : fs::path(o.out);
  const auto records = collect_records(root);
  std::cout << emit_report(records, root);
  return kExitOk;
}

int cmd_sample(const CommonOptions& o, const std::string& checkpoint, const std::string& data_file, int count) {
  auto loaded = load_model(checkpoint);
  const auto& sim = *loaded.simulator;
  const auto data = read_dataset(data_file);
  if (!data.problem.empty() && data.problem != sim.name())
    throw ConfigError("dataset is from " + data.problem + ", checkpoint was trained on " + sim.name());
  RandomStream rng(o.seed.value_or(loaded.config.seed));
  const sim::Dataset x = sim.preprocess_data(data.x);
  const Eigen::MatrixXd raw = to_raw(sim, loaded.model->sample(std::span<const sim::Dataset>(&x, 1), count, rng).front());

  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out, std::ios::trunc);
    if (!file) throw IoError("cannot write " + o.out);
  }
  std::ostream& os = o.out.empty() ? std::cout : file;
  const auto names = sim.theta_names();
  for (std::size_t j = 0; j < names.size(); ++j) os << (j ? "," : "") << names[j];
  os << '\n';
  os.precision(9);
  for (Eigen::Index l = 0; l < raw.rows(); ++l) {
    for (Eigen::Index j = 0; j < raw.cols(); ++j) os << (j ? "," : "") << raw(l, j);
    os << '\n';
  }
  return kExitOk;
}

int cmd_validate(const CommonOptions& o, const std::string& checkpoint, bool oracle, const std::string& method, int C,
                 int L) {
  std::unique_ptr<sim::Simulator> owned;
  std::optional<LoadedModel> loaded;
  validate::PosteriorSampler sampler;
  std::uint64_t seed = 0;
  if (oracle) {
    if (o.config.empty()) throw ConfigError("--oracle needs --config to name the problem");
    const RunConfig cfg = resolve(o);
    owned = cfg.make_simulator();
    sampler = validate::oracle_sampler(*owned);
    seed = cfg.seed;
  } else {
    if (checkpoint.empty()) throw ConfigError("validate needs --checkpoint or --oracle");
    loaded = load_model(checkpoint);
    sampler = model_sampler(*loaded->model, *loaded->simulator);
    seed = o.seed.value_or(loaded->config.seed);
  }
  const sim::Simulator& problem = owned ? *owned : *loaded->simulator;
  RandomStream rng = RandomStream::derive(seed, 2);
  const auto report = validate::calibrate(problem, sampler, C, L, rng);
  print_report(report, method == "sbc", method == "tarp");
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    auto j = report_json(report);
    j["problem"] = problem.name();
    j["method"] = method;
    std::ofstream(fs::path(o.out) / "report.json") << j.dump(2) << '\n';
    std::ofstream(fs::path(o.out) / "coverage_curve.json") << j.at("coverage_curve").dump() << '\n';
  }
  return kExitOk;
}

int cmd_simulate(const CommonOptions& o, int count, std::optional<int> n) {
  const RunConfig cfg = resolve(o);
  const auto sim = cfg.make_simulator();
  const fs::path dir = o.out.empty() ? cfg.output_dir / "datasets" : fs::path(o.out);
  fs::create_directories(dir);
  RandomStream rng = RandomStream::derive(cfg.seed, 3);
  for (int i = 0; i < count; ++i) {
    const auto draw = sim->sample_prior(rng);
    const int size = n ? *n : sim->sample_size(rng);
    DatasetFile d{sim->name(), draw.theta, sim->preprocess_theta(draw.theta), sim->sample_dataset(draw.theta, size, rng)};
    char name[64];
    std::snprintf(name, sizeof name, "dataset_%04d.csv", i);
    write_dataset(dir / name, d);
  }
  std::printf("wrote %d datasets to %s\n", count, dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  keep_large_allocations_on_heap();
  CLI::App app{"Neural posterior estimation with diffusion and flow decoders"};
  app.require_subcommand(1);

  CommonOptions train_o, bench_o, report_o, sample_o, validate_o, simulate_o;
  auto* train = app.add_subcommand("train", "train one model and evaluate it periodically");
  add_common(train, train_o, true);
  auto* bench = app.add_subcommand("benchmark", "repeated training runs plus the summary table");
  add_common(bench, bench_o, true);
  auto* report = app.add_subcommand("report", "summarize every run report below --out");
  add_common(report, report_o, false);

  std::string checkpoint, data_file;
  int count = 100;
  auto* sample = app.add_subcommand("sample", "posterior draws (raw units, CSV) for one dataset file");
  add_common(sample, sample_o, false);
  sample->add_option("--checkpoint", checkpoint, "checkpoint directory")->required()->check(CLI::ExistingDirectory);
  sample->add_option("--data", data_file, "dataset file")->required()->check(CLI::ExistingFile);
  sample->add_option("--count", count, "number of draws")->check(CLI::PositiveNumber);

  std::string method = "sbc", v_checkpoint;
  int C = 1000, L = 100;
  bool oracle = false;
  auto* val = app.add_subcommand("validate", "SBC or TARP for a checkpoint or the exact posterior");
  add_common(val, validate_o, false);
  val->add_option("--checkpoint", v_checkpoint, "checkpoint directory")->check(CLI::ExistingDirectory);
  val->add_flag("--oracle", oracle, "use the conjugate posterior of the configured problem");
  val->add_option("--method", method, "sbc or tarp")->check(CLI::IsMember({"sbc", "tarp"}));
  val->add_option("--C", C, "calibration rounds");
  val->add_option("--L", L, "posterior draws per round");

  int sim_count = 10;
  std::optional<int> sim_n;
  auto* simulate = app.add_subcommand("simulate", "write simulated datasets for the configured problem");
  add_common(simulate, simulate_o, true);
  simulate->add_option("--count", sim_count, "number of datasets")->check(CLI::PositiveNumber);
  simulate->add_option("--n", sim_n, "observations per dataset (default: drawn)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train) return cmd_train(train_o);
    if (*bench) return cmd_benchmark(bench_o);
    if (*report) return cmd_report(report_o);
    if (*sample) return cmd_sample(sample_o, checkpoint, data_file, count);
    if (*val) return cmd_validate(validate_o, v_checkpoint, oracle, method, C, L);
    if (*simulate) return cmd_simulate(simulate_o, sim_count, sim_n);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.error_class());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
