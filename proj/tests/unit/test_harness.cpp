#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "npe/harness/benchmark.hpp"
#include "npe/harness/dataset_io.hpp"
#include "npe/harness/exit_code.hpp"

using namespace npe;
using namespace npe::harness;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory per test, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("npe_harness_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

/// Small, fast configuration: tiny networks and the minimum calibration sizes.
RunConfig tiny_config(DecoderKind decoder = DecoderKind::cdiff, const std::string& problem = "normal_gamma") {
  RunConfig c;
  c.problem = problem;
  c.decoder = decoder;
  c.seed = 11;
  c.training_batches = 6;
  c.batch_size = 16;
  c.eval_every = 3;
  c.C = 100;
  c.L = 10;
  c.denoiser = {16, 2, 8};
  c.flow = {4, 0.1, flow::SoftClamp::tanh, 16, 2};
  c.deepset = {8, 8, 4};
  c.bilstm = {4, 4};
  return c;
}

std::string without_wall_time(const std::string& csv) {
  std::stringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

}  // namespace

// ---------------------------------------------------------------- config

TEST(RunConfig, ParsesEveryTable) {
  const auto c = parse_run_config(R"(
    decoder = "cnf"
    summary = "deepset"
    seed = 42
    training_batches = 100
    batch_size = 64
    eval_every = 50
    C = 200
    L = 20
    repeats = 2
    output_dir = "runs/x"

    [problem]
    name = "normal_gamma"
    [problem.hyperparams]
    kappa = 2.0
    n_max = 80

    [edm]
    sigma_data = 0.4
    n_steps = 32
    sqrt_c_in = false

    [denoiser]
    hidden_width = 64
    [flow]
    n_flows = 8
    alpha = 0.2
    clamp = "atan"
    [deepset]
    out_dim = 16
    [bilstm]
    hidden = 8
    [optimizer]
    lr = 5e-4
    schedule = "cosine"
  )");
  EXPECT_EQ(c.problem, "normal_gamma");
  EXPECT_EQ(c.hyperparams.at("kappa"), 2.0);
  EXPECT_EQ(c.hyperparams.at("n_max"), 80.0);
  EXPECT_EQ(c.decoder, DecoderKind::cnf);
  EXPECT_EQ(c.summary, nets::SummaryKind::deepset);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.training_batches, 100);
  EXPECT_EQ(c.batch_size, 64);
  EXPECT_EQ(c.eval_every, 50);
  EXPECT_EQ(c.C, 200);
  EXPECT_EQ(c.L, 20);
  EXPECT_EQ(c.repeats, 2);
  EXPECT_EQ(c.output_dir, fs::path("runs/x"));
  EXPECT_EQ(c.edm.sigma_data, 0.4);
  EXPECT_EQ(c.edm.n_steps, 32);
  EXPECT_FALSE(c.edm.sqrt_c_in);
  EXPECT_EQ(c.denoiser.hidden_width, 64);
  EXPECT_EQ(c.flow.n_flows, 8);
  EXPECT_EQ(c.flow.alpha, 0.2);
  EXPECT_EQ(c.flow.clamp, flow::SoftClamp::atan);
  EXPECT_EQ(c.deepset.out_dim, 16);
  EXPECT_EQ(c.bilstm.hidden, 8);
  EXPECT_EQ(c.optimizer.lr, 5e-4);
  EXPECT_EQ(c.lr_schedule, LrSchedule::cosine);
}

TEST(RunConfig, ProblemMayBeAPlainName) {
  const auto c = parse_run_config("problem = \"poisson_gamma\"");
  EXPECT_EQ(c.problem, "poisson_gamma");
  EXPECT_TRUE(c.hyperparams.empty());
}

TEST(RunConfig, DeskScaleDefaults) {
  const RunConfig c;
  EXPECT_EQ(c.training_batches, 5000);
  EXPECT_EQ(c.repeats, 3);
  EXPECT_EQ(c.C, 1000);
  EXPECT_EQ(c.L, 100);
}

TEST(RunConfig, SummaryDefaultsFollowTheDataKind) {
  const RunConfig c;
  EXPECT_EQ(c.summary_kind(sim::make_simulator("witch_hat")->spec()), nets::SummaryKind::none);
  EXPECT_EQ(c.summary_kind(sim::make_simulator("normal_gamma")->spec()), nets::SummaryKind::deepset);
  EXPECT_EQ(c.summary_kind(sim::make_simulator("fbm")->spec()), nets::SummaryKind::bilstm);
}

TEST(RunConfig, RejectsInvalidInput) {
  EXPECT_THROW(parse_run_config("problem = \"normal_gamma\"\nsummary = \"none\""), ConfigError);
  EXPECT_THROW(parse_run_config("batch_size = 0"), ConfigError);
  EXPECT_THROW(parse_run_config("C = -5"), ConfigError);
  EXPECT_THROW(parse_run_config("seed = -1"), ConfigError);
  EXPECT_THROW(parse_run_config("batchsize = 10"), ConfigError);
  EXPECT_THROW(parse_run_config("[edm]\nsigma_max = 0.001"), ConfigError);
  EXPECT_THROW(parse_run_config("decoder = \"gan\""), ConfigError);
  EXPECT_THROW(parse_run_config("training_batches = \"many\""), ConfigError);
  EXPECT_THROW(parse_run_config("problem = = 3"), ConfigError);
  EXPECT_THROW(parse_run_config("problem = \"no_such_problem\""), NotRegistered);
  EXPECT_THROW(load_run_config("/nonexistent/run.toml"), ConfigError);
}

TEST(RunConfig, JsonSnapshotRoundTrips) {
  RunConfig c = tiny_config(DecoderKind::cnf);
  c.hyperparams["kappa"] = 3.0;
  c.summary = nets::SummaryKind::deepset;
  c.lr_schedule = LrSchedule::cosine;
  c.edm.scaled_init = false;
  const RunConfig back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(RunConfig, ShippedConfigsLoad) {
  const fs::path dir = fs::path(NPE_SOURCE_DIR) / "configs";
  int loaded = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".toml") continue;
    EXPECT_NO_THROW(load_run_config(e.path())) << e.path();
    ++loaded;
  }
  EXPECT_GT(loaded, 0);
}

TEST(ExitCodes, MapErrorClasses) {
  EXPECT_EQ(exit_code(ConfigError("x").error_class()), 2);
  EXPECT_EQ(exit_code(ShapeError("x").error_class()), 2);
  EXPECT_EQ(exit_code(NumericsError("x").error_class()), 3);
  EXPECT_EQ(exit_code(SamplingDiverged("x").error_class()), 3);
  EXPECT_EQ(exit_code(ValidationError("x").error_class()), 4);
  EXPECT_EQ(exit_code(EmptyReport("x").error_class()), 4);
}

// ---------------------------------------------------------------- model

TEST(Model, NoEncoderPathHasNoSummaryParameters) {
  const auto cfg = tiny_config(DecoderKind::cdiff, "witch_hat");
  const auto sim = cfg.make_simulator();
  RandomStream init(1);
  Model m(cfg, *sim, init);
  for (const auto* p : m.parameters()) EXPECT_NE(p->name.rfind("summary.", 0), 0u) << p->name;
}

TEST(Model, SamplerReturnsRawUnits) {
  const auto cfg = tiny_config();
  const auto sim = cfg.make_simulator();
  RandomStream init(1), rng(2);
  Model m(cfg, *sim, init);
  const auto cases = validate::simulate_cases(*sim, 3, rng);
  const auto draws = model_sampler(m, *sim)(cases, 7, rng);
  ASSERT_EQ(draws.size(), 3u);
  for (const auto& d : draws) {
    EXPECT_EQ(d.rows(), 7);
    EXPECT_EQ(d.cols(), sim->spec().raw_theta_dim);
    // The scale margin is positive in raw units.
    EXPECT_TRUE((d.col(1).array() > 0).all());
  }
}

// ---------------------------------------------------------------- checkpoint

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  ScratchDir dir("roundtrip");
  const auto cfg = tiny_config();
  const auto sim = cfg.make_simulator();
  RandomStream init(3);
  Model a(cfg, *sim, init);
  for (auto* p : a.parameters()) p->value.setRandom();
  save_checkpoint(dir.path() / "a", a.parameters(), {to_json(cfg), "state", 17});

  RandomStream other(99);
  Model b(cfg, *sim, other);
  const auto state = load_checkpoint(dir.path() / "a", b.parameters());
  EXPECT_EQ(state.step, 17);
  EXPECT_EQ(state.rng_state, "state");
  EXPECT_EQ(state.config, to_json(cfg));
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i)
    EXPECT_EQ(0, std::memcmp(pa[i]->value.data(), pb[i]->value.data(), sizeof(float) * pa[i]->value.size()))
        << pa[i]->name;

  save_checkpoint(dir.path() / "b", b.parameters(), state);
  EXPECT_EQ(slurp(dir.path() / "a" / kWeightsFile), slurp(dir.path() / "b" / kWeightsFile));
  EXPECT_EQ(slurp(dir.path() / "a" / kManifestFile), slurp(dir.path() / "b" / kManifestFile));
}

TEST(Checkpoint, BlobIsLittleEndianRowMajorF32) {
  ScratchDir dir("layout");
  nets::Parameter<float> w("w", (nets::Matrix<float>(2, 2) << 1.0f, 2.0f, 3.0f, -0.5f).finished());
  save_checkpoint(dir.path(), nets::ParamList<float>{&w}, {});
  const std::string blob = slurp(dir.path() / kWeightsFile);
  ASSERT_EQ(blob.size(), 16u);
  // 2.0f = 0x40000000, -0.5f = 0xBF000000.
  EXPECT_EQ(static_cast<unsigned char>(blob[7]), 0x40);
  EXPECT_EQ(static_cast<unsigned char>(blob[15]), 0xBF);
  const auto manifest = nlohmann::json::parse(slurp(dir.path() / kManifestFile));
  EXPECT_EQ(manifest["tensors"][0]["name"], "w");
  EXPECT_EQ(manifest["tensors"][0]["shape"], nlohmann::json({2, 2}));
  EXPECT_EQ(manifest["tensors"][0]["dtype"], "f32");
}

TEST(Checkpoint, LoadedModelSamplesBitIdentically) {
  ScratchDir dir("sample");
  const auto cfg = tiny_config();
  const auto sim = cfg.make_simulator();
  RandomStream init(5);
  Model a(cfg, *sim, init);
  for (auto* p : a.parameters()) p->value.setRandom();
  save_checkpoint(dir.path(), a.parameters(), {to_json(cfg), "", 0});
  auto loaded = load_model(dir.path());

  RandomStream data_rng(6);
  const auto cases = validate::simulate_cases(*sim, 4, data_rng);
  std::vector<sim::Dataset> data;
  for (const auto& k : cases) data.push_back(k.x_proc);
  RandomStream r1(7), r2(7);
  const auto s1 = a.sample(data, 25, r1);
  const auto s2 = loaded.model->sample(data, 25, r2);
  for (std::size_t i = 0; i < s1.size(); ++i) EXPECT_EQ(0, std::memcmp(s1[i].data(), s2[i].data(), sizeof(double) * s1[i].size()));
}

TEST(Checkpoint, TruncatedBlobLeavesModelUntouched) {
  ScratchDir dir("truncated");
  const auto cfg = tiny_config();
  const auto sim = cfg.make_simulator();
  RandomStream init(8);
  Model a(cfg, *sim, init);
  save_checkpoint(dir.path(), a.parameters(), {});
  const std::string blob = slurp(dir.path() / kWeightsFile);
  std::ofstream(dir.path() / kWeightsFile, std::ios::binary | std::ios::trunc) << blob.substr(0, blob.size() - 4);

  RandomStream other(9);
  Model b(cfg, *sim, other);
  std::vector<nets::Matrix<float>> before;
  for (const auto* p : b.parameters()) before.push_back(p->value);
  EXPECT_THROW(load_checkpoint(dir.path(), b.parameters()), CorruptCheckpoint);
  const auto after = b.parameters();
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i], after[i]->value) << after[i]->name;
}

TEST(Checkpoint, CrossConfigLoadNamesTheTensor) {
  ScratchDir dir("shape");
  auto small = tiny_config();
  const auto sim = small.make_simulator();
  RandomStream init(10);
  Model a(small, *sim, init);
  save_checkpoint(dir.path(), a.parameters(), {});
  auto wide = small;
  wide.denoiser.hidden_width = 24;
  Model b(wide, *sim, init);
  try {
    load_checkpoint(dir.path(), b.parameters());
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("denoiser.0.weight"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, MissingOrGarbledFilesAreCorrupt) {
  ScratchDir dir("garbled");
  nets::Parameter<float> w("w", nets::Matrix<float>::Ones(1, 3));
  const nets::ParamList<float> params{&w};
  EXPECT_THROW(load_checkpoint(dir.path(), params), CorruptCheckpoint);
  save_checkpoint(dir.path(), params, {});
  std::ofstream(dir.path() / kManifestFile, std::ios::trunc) << "{not json";
  EXPECT_THROW(load_checkpoint(dir.path(), params), CorruptCheckpoint);
}

// ---------------------------------------------------------------- run_training

TEST(RunTraining, WritesEveryOutput) {
  ScratchDir dir("outputs");
  const auto result = run_training(tiny_config(), dir.path());
  for (const char* f : {"metrics.csv", "report.json", "coverage_curve.json", "checkpoint/manifest.json",
                        "checkpoint/weights.bin"})
    EXPECT_TRUE(fs::exists(dir.path() / f)) << f;
  std::ifstream csv(dir.path() / "metrics.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "batch,loss,sbc_wd_avg,sbc_wd_worst,sbc_tv,sbc_hellinger,ecp,wall_s");
  ASSERT_EQ(result.rows.size(), 2u);
  EXPECT_EQ(result.rows[0].batch, 3);
  EXPECT_EQ(result.rows[1].batch, 6);
  EXPECT_GT(result.rows[1].wall_s, 0.0);
  const auto manifest = nlohmann::json::parse(slurp(dir.path() / "checkpoint/manifest.json"));
  EXPECT_EQ(manifest["step"], 6);
}

TEST(RunTraining, FinalPartialIntervalIsEvaluated) {
  ScratchDir dir("partial_interval");
  auto cfg = tiny_config();
  cfg.training_batches = 7;
  const auto result = run_training(cfg, dir.path());
  ASSERT_EQ(result.rows.size(), 3u);
  EXPECT_EQ(result.rows.back().batch, 7);
}

TEST(RunTraining, SameSeedGivesIdenticalOutputs) {
  ScratchDir dir("determinism");
  const auto cfg = tiny_config();
  run_training(cfg, dir.path() / "a");
  run_training(cfg, dir.path() / "b");
  EXPECT_EQ(without_wall_time(slurp(dir.path() / "a/metrics.csv")),
            without_wall_time(slurp(dir.path() / "b/metrics.csv")));
  EXPECT_EQ(slurp(dir.path() / "a/checkpoint/weights.bin"), slurp(dir.path() / "b/checkpoint/weights.bin"));
  EXPECT_EQ(slurp(dir.path() / "a/checkpoint/manifest.json"), slurp(dir.path() / "b/checkpoint/manifest.json"));

  auto reseeded = cfg;
  reseeded.seed = cfg.seed + 1;
  run_training(reseeded, dir.path() / "c");
  EXPECT_NE(slurp(dir.path() / "a/checkpoint/weights.bin"), slurp(dir.path() / "c/checkpoint/weights.bin"));
}

TEST(RunTraining, FlowDecoderSharesTheCsvSchema) {
  ScratchDir dir("flow");
  const auto result = run_training(tiny_config(DecoderKind::cnf), dir.path());
  std::ifstream csv(dir.path() / "metrics.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, kMetricsHeader);
  // Untrained flow NLL of a standardized 2-d target is near 2 * 0.5 * ln(2 pi e).
  EXPECT_NEAR(result.rows.front().loss, std::log(2 * M_PI * std::exp(1.0)), 1.0);
}

TEST(RunTraining, FailureKeepsPartialCsv) {
  ScratchDir dir("failure");
  // A regular file where the checkpoint directory should go makes the final save fail.
  std::ofstream(dir.path() / "checkpoint") << "occupied";
  EXPECT_ANY_THROW(run_training(tiny_config(), dir.path()));
  std::ifstream csv(dir.path() / "metrics.csv");
  int lines = 0;
  for (std::string l; std::getline(csv, l);) ++lines;
  EXPECT_EQ(lines, 3);
}

TEST(RunTraining, GaussianToyCalibratesAfter2kBatches) {
  ScratchDir dir("toy");
  RunConfig cfg;
  cfg.problem = "gaussian_toy";
  cfg.seed = 1;
  cfg.training_batches = 2000;
  cfg.eval_every = 2000;
  cfg.lr_schedule = LrSchedule::cosine;
  const auto result = run_training(cfg, dir.path());
  EXPECT_LT(result.final_report.wd_avg, 0.05);
  EXPECT_EQ(result.final_report.skipped, 0);
}

// ---------------------------------------------------------------- report

TEST(Report, SingleRunSingleMarginIsItsOwnAverageAndWorst) {
  const RunRecord r{"normal_gamma", DecoderKind::cdiff, {0.017}, 0.004, {}};
  const auto a = aggregate(std::span<const RunRecord>(&r, 1));
  EXPECT_DOUBLE_EQ(a.wd_avg, 0.017);
  EXPECT_DOUBLE_EQ(a.wd_worst, 0.017);
  EXPECT_DOUBLE_EQ(a.ecp, 0.004);
}

TEST(Report, TwoRunsAverageAndWorstRenderScaled) {
  const std::vector<RunRecord> runs{{"normal_gamma", DecoderKind::cdiff, {0.01}, 0.002, {}},
                                    {"normal_gamma", DecoderKind::cdiff, {0.03}, 0.004, {}}};
  const auto a = aggregate(runs);
  EXPECT_DOUBLE_EQ(a.wd_avg, 0.02);
  EXPECT_DOUBLE_EQ(a.wd_worst, 0.03);
  EXPECT_DOUBLE_EQ(a.ecp, 0.003);
  const auto table = format_table(summarize(runs));
  EXPECT_NE(table.find("| IID | Normal gamma | - | - | - | 20.000 | 30.000 | 3.000 |"), std::string::npos) << table;
}

TEST(Report, IidGroupMatchesTheTableSchema) {
  std::vector<RunRecord> runs;
  const std::vector<std::string> iid{"normal_gamma", "g_and_k", "normal_wishart"};
  for (std::size_t i = 0; i < iid.size(); ++i) {
    runs.push_back({iid[i], DecoderKind::cnf, {0.030 + 0.01 * i, 0.040}, 0.010, {}});
    runs.push_back({iid[i], DecoderKind::cdiff, {0.020, 0.025 + 0.01 * i}, 0.008, {}});
  }
  const std::string expected =
      "| Group | Problem | cNF WD (avg) | cNF WD (worst) | cNF ECP | cDiff WD (avg) | cDiff WD (worst) | cDiff ECP |\n"
      "|---|---|---:|---:|---:|---:|---:|---:|\n"
      "| IID | Normal gamma | 35.000 | 40.000 | 10.000 | 22.500 | 25.000 | 8.000 |\n"
      "| IID | Multivariate g-and-k | 40.000 | 40.000 | 10.000 | 27.500 | 35.000 | 8.000 |\n"
      "| IID | Normal wishart | 45.000 | 50.000 | 10.000 | 32.500 | 45.000 | 8.000 |\n"
      "| IID | average | 40.000 | 43.333 | 10.000 | 27.500 | 35.000 | 8.000 |\n";
  EXPECT_EQ(format_table(summarize(runs)), expected);
}

TEST(Report, GroupsFollowBenchmarkOrder) {
  const std::vector<RunRecord> runs{{"fbm", DecoderKind::cdiff, {0.05}, 0.01, {}},
                                    {"witch_hat", DecoderKind::cnf, {0.1}, 0.02, {}},
                                    {"normal_gamma", DecoderKind::cdiff, {0.03}, 0.01, {}}};
  const auto s = summarize(runs);
  std::vector<std::string> groups;
  for (const auto& r : s.rows)
    if (r.problem == "average") groups.push_back(r.group);
  EXPECT_EQ(groups, (std::vector<std::string>{"No Encoder", "IID", "Sequential"}));
}

TEST(Report, EmptyInputIsAnError) {
  EXPECT_THROW(summarize(std::vector<RunRecord>{}), EmptyReport);
  const RunRecord no_margins{"normal_gamma", DecoderKind::cdiff, {}, 0.0, {}};
  EXPECT_THROW(aggregate(std::span<const RunRecord>(&no_margins, 1)), EmptyReport);
}

TEST(Report, ReadsRunReportsFromDisk) {
  ScratchDir dir("collect");
  run_training(tiny_config(), dir.path() / "run_a");
  run_training(tiny_config(DecoderKind::cnf), dir.path() / "run_b");
  const auto records = collect_records(dir.path());
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].decoder, DecoderKind::cdiff);
  EXPECT_EQ(records[1].decoder, DecoderKind::cnf);
  EXPECT_EQ(records[0].margin_wd.size(), 2u);
  EXPECT_EQ(records[0].coverage_curve.size(), 99u);
  const auto table = emit_report(records, dir.path());
  EXPECT_NE(table.find("| IID | Normal gamma |"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir.path() / "coverage_curves.json"));
  const auto curves = nlohmann::json::parse(slurp(dir.path() / "coverage_curves.json"));
  EXPECT_EQ(curves["normal_gamma/cdiff"].size(), 1u);
}

TEST(Benchmark, RepeatsUseConsecutiveSeeds) {
  ScratchDir dir("benchmark");
  auto cfg = tiny_config();
  cfg.repeats = 2;
  const auto results = run_benchmark(cfg, dir.path());
  ASSERT_EQ(results.size(), 2u);
  EXPECT_TRUE(fs::exists(dir.path() / "seed_11/metrics.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "seed_12/metrics.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "summary.md"));
}

// ---------------------------------------------------------------- dataset files

TEST(DatasetFile, RoundTripsExactly) {
  ScratchDir dir("dataset");
  const auto sim = sim::make_simulator("normal_wishart");
  RandomStream rng(12);
  const auto draw = sim->sample_prior(rng);
  DatasetFile d{"normal_wishart", draw.theta, sim->preprocess_theta(draw.theta), sim->sample_dataset(draw.theta, 60, rng)};
  write_dataset(dir.path() / "x.csv", d);
  const auto back = read_dataset(dir.path() / "x.csv");
  EXPECT_EQ(back.problem, d.problem);
  EXPECT_EQ(back.theta_raw, d.theta_raw);
  EXPECT_EQ(back.theta_proc, d.theta_proc);
  EXPECT_EQ(back.x, d.x);
}

TEST(DatasetFile, RejectsMalformedFiles) {
  ScratchDir dir("bad_dataset");
  std::ofstream(dir.path() / "ragged.csv") << R"({"problem":"normal_gamma","n":2})" << "\n1,2\n3\n";
  EXPECT_THROW(read_dataset(dir.path() / "ragged.csv"), ShapeError);
  std::ofstream(dir.path() / "count.csv") << R"({"problem":"normal_gamma","n":3})" << "\n1\n2\n";
  EXPECT_THROW(read_dataset(dir.path() / "count.csv"), ShapeError);
  std::ofstream(dir.path() / "header.csv") << "not json\n1\n";
  EXPECT_THROW(read_dataset(dir.path() / "header.csv"), ConfigError);
}
