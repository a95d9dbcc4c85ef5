#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "npe/harness/config.hpp"
#include "npe/validate/calibration.hpp"

namespace npe::harness {

/// The parts of one finished run that the summary table needs.
struct RunRecord {
  std::string problem;
  DecoderKind decoder = DecoderKind::cdiff;
  std::vector<double> margin_wd;
  double ecp = 0.0;
  std::vector<std::pair<double, double>> coverage_curve;
};

inline RunRecord make_record(std::string problem, DecoderKind decoder, const validate::CalibrationReport& r) {
  return {std::move(problem), decoder, r.margin_wd, r.ecp, r.coverage_curve};
}

/// Reads a report.json written by run_training.
inline RunRecord record_from_json(const nlohmann::json& j) {
  try {
    RunRecord r;
    r.problem = j.at("problem").get<std::string>();
    r.decoder = parse_decoder_kind(j.at("decoder").get<std::string>());
    r.margin_wd = j.at("margin_wd").get<std::vector<double>>();
    r.ecp = j.at("ecp").get<double>();
    for (const auto& p : j.value("coverage_curve", nlohmann::json::array()))
      r.coverage_curve.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed run report: " + std::string(e.what()));
  }
}

/// Every report.json below `root`, in path order.
inline std::vector<RunRecord> collect_records(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> paths;
  if (std::filesystem::is_directory(root))
    for (const auto& e : std::filesystem::recursive_directory_iterator(root))
      if (e.is_regular_file() && e.path().filename() == "report.json") paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());
  std::vector<RunRecord> out;
  for (const auto& p : paths) {
    std::ifstream is(p);
    try {
      const auto j = nlohmann::json::parse(is);
      // Only per-run reports carry margins; benchmark summaries are skipped.
      if (j.contains("margin_wd")) out.push_back(record_from_json(j));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(p.string() + ": " + e.what());
    }
  }
  return out;
}

/// Per (problem, decoder): wd_avg is the mean over all runs and margins,
/// wd_worst the max, ecp the mean over runs. Values are stored unscaled.
struct Aggregate {
  double wd_avg = 0.0;
  double wd_worst = 0.0;
  double ecp = 0.0;
  int runs = 0;
};

inline Aggregate aggregate(std::span<const RunRecord> runs) {
  Aggregate a;
  std::size_t margins = 0;
  for (const auto& r : runs) {
    for (double wd : r.margin_wd) {
      a.wd_avg += wd;
      a.wd_worst = std::max(a.wd_worst, wd);
    }
    margins += r.margin_wd.size();
    a.ecp += r.ecp;
    ++a.runs;
  }
  if (margins == 0) throw EmptyReport("no calibration margins to aggregate");
  a.wd_avg /= static_cast<double>(margins);
  a.ecp /= a.runs;
  return a;
}

inline std::string display_name(std::string_view problem) {
  static const std::map<std::string, std::string, std::less<>> names{
      {"sum_of_cosines", "Sum of cosines"},
      {"witch_hat", "Witch's hat"},
      {"dirichlet_multinomial", "Dirichlet multinomial"},
      {"socks", "Socks"},
      {"species_sampling", "Species sampling"},
      {"poisson_gamma", "Poisson gamma"},
      {"normal_gamma", "Normal gamma"},
      {"g_and_k", "Multivariate g-and-k"},
      {"normal_wishart", "Normal wishart"},
      {"lotka_volterra", "Lotka-Volterra"},
      {"fbm", "fractional BM"},
      {"stochastic_volatility", "stochastic vol"},
      {"markov_switching", "Markov switch"},
      {"var", "VAR"},
  };
  const auto it = names.find(problem);
  return it == names.end() ? std::string(problem) : it->second;
}

inline constexpr const char* kTableHeader =
    "| Group | Problem | cNF WD (avg) | cNF WD (worst) | cNF ECP | cDiff WD (avg) | cDiff WD (worst) | cDiff ECP |";

struct Summary {
  struct Row {
    std::string group;
    std::string problem;
    std::optional<Aggregate> cnf;
    std::optional<Aggregate> cdiff;
  };
  std::vector<Row> rows;  // problems then one "average" row per group
  std::map<std::string, std::vector<RunRecord>> runs_by_key;
};

/// Groups runs by problem and decoder, in benchmark order (unknown problems last),
/// with a per-group average over problems that have results for that decoder.
inline Summary summarize(std::span<const RunRecord> runs) {
  if (runs.empty()) throw EmptyReport("no runs to report");
  std::vector<std::string> order = sim::benchmark_problems();
  for (const auto& r : runs)
    if (std::find(order.begin(), order.end(), r.problem) == order.end()) order.push_back(r.problem);

  Summary s;
  const auto key = [](std::string_view p, DecoderKind d) { return std::string(p) + "/" + std::string(to_string(d)); };
  for (const auto& r : runs) s.runs_by_key[key(r.problem, r.decoder)].push_back(r);

  const auto group_of = [](const std::string& p) -> std::string {
    try {
      return std::string(sim::group_label(sim::problem_group(p)));
    } catch (const NotRegistered&) {
      return "Other";
    }
  };
  const auto agg = [&](const std::string& p, DecoderKind d) -> std::optional<Aggregate> {
    const auto it = s.runs_by_key.find(key(p, d));
    if (it == s.runs_by_key.end()) return std::nullopt;
    return aggregate(it->second);
  };
  const auto mean_of = [](const std::vector<Aggregate>& v) -> std::optional<Aggregate> {
    if (v.empty()) return std::nullopt;
    Aggregate m;
    for (const auto& a : v) {
      m.wd_avg += a.wd_avg / static_cast<double>(v.size());
      m.wd_worst += a.wd_worst / static_cast<double>(v.size());
      m.ecp += a.ecp / static_cast<double>(v.size());
      m.runs += a.runs;
    }
    return m;
  };

  std::vector<std::string> groups;
  for (const auto& p : order)
    if (s.runs_by_key.contains(key(p, DecoderKind::cnf)) || s.runs_by_key.contains(key(p, DecoderKind::cdiff)))
      if (std::find(groups.begin(), groups.end(), group_of(p)) == groups.end()) groups.push_back(group_of(p));
  for (const auto& g : groups) {
    std::vector<Aggregate> cnf, cdiff;
    for (const auto& p : order) {
      if (group_of(p) != g) continue;
      Summary::Row row{g, display_name(p), agg(p, DecoderKind::cnf), agg(p, DecoderKind::cdiff)};
      if (!row.cnf && !row.cdiff) continue;
      if (row.cnf) cnf.push_back(*row.cnf);
      if (row.cdiff) cdiff.push_back(*row.cdiff);
      s.rows.push_back(std::move(row));
    }
    s.rows.push_back({g, "average", mean_of(cnf), mean_of(cdiff)});
  }
  return s;
}

/// Markdown table; values are multiplied by 10^3 and printed with three decimals.
inline std::string format_table(const Summary& s) {
  const auto cells = [](const std::optional<Aggregate>& a) {
    if (!a) return std::string(" - | - | -");
    char buf[96];
    std::snprintf(buf, sizeof buf, " %.3f | %.3f | %.3f", 1e3 * a->wd_avg, 1e3 * a->wd_worst, 1e3 * a->ecp);
    return std::string(buf);
  };
  std::string out = std::string(kTableHeader) + "\n|---|---|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& r : s.rows) out += "| " + r.group + " | " + r.problem + " |" + cells(r.cnf) + " |" + cells(r.cdiff) + " |\n";
  return out;
}

inline nlohmann::json summary_json(const Summary& s) {
  const auto cell = [](const std::optional<Aggregate>& a) -> nlohmann::json {
    if (!a) return nullptr;
    return {{"wd_avg", a->wd_avg}, {"wd_worst", a->wd_worst}, {"ecp", a->ecp}, {"runs", a->runs}};
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : s.rows)
    rows.push_back({{"group", r.group}, {"problem", r.problem}, {"cnf", cell(r.cnf)}, {"cdiff", cell(r.cdiff)}});
  return {{"rows", rows}};
}

/// Coverage curves of every run, keyed "problem/decoder", one array per run.
inline nlohmann::json coverage_json(const Summary& s) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, runs] : s.runs_by_key) {
    nlohmann::json curves = nlohmann::json::array();
    for (const auto& r : runs) {
      nlohmann::json c = nlohmann::json::array();
      for (const auto& [level, frac] : r.coverage_curve) c.push_back({level, frac});
      curves.push_back(std::move(c));
    }
    out[key] = std::move(curves);
  }
  return out;
}

/// Writes summary.md, summary.json and coverage_curves.json into `dir`; returns the table.
inline std::string emit_report(std::span<const RunRecord> runs, const std::filesystem::path& dir) {
  const Summary s = summarize(runs);
  const std::string table = format_table(s);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "summary.md") << table;
  std::ofstream(dir / "summary.json") << summary_json(s).dump(2) << '\n';
  std::ofstream(dir / "coverage_curves.json") << coverage_json(s).dump() << '\n';
  return table;
}

}  // namespace npe::harness
