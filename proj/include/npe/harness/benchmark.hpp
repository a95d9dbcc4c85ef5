#pragma once

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "npe/harness/report.hpp"
#include "npe/harness/run.hpp"

namespace npe::harness {

/// `repeats` independent runs with seeds seed, seed+1, ... in `out/seed_<s>`,
/// followed by the aggregate report in `out`.
inline std::vector<RunResult> run_benchmark(const RunConfig& cfg, const std::filesystem::path& out,
                                            std::ostream* progress = nullptr) {
  std::vector<RunResult> results;
  std::vector<RunRecord> records;
  for (int r = 0; r < cfg.repeats; ++r) {
    RunConfig run = cfg;
    run.seed = cfg.seed + static_cast<std::uint64_t>(r);
    const auto dir = out / ("seed_" + std::to_string(run.seed));
    run.output_dir = dir;
    results.push_back(run_training(run, dir, progress));
    records.push_back(make_record(run.problem, run.decoder, results.back().final_report));
  }
  const std::string table = emit_report(records, out);
  if (progress) *progress << table;
  return results;
}

}  // namespace npe::harness
