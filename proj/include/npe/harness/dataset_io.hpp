#pragma once

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "npe/core/errors.hpp"
#include "npe/sim/spec.hpp"

namespace npe::harness {

/// A simulated dataset on disk: one JSON header line, then N rows of D
/// comma-separated raw observations.
struct DatasetFile {
  std::string problem;
  Eigen::VectorXd theta_raw;
  Eigen::VectorXd theta_proc;
  sim::Dataset x;
};

inline void write_dataset(const std::filesystem::path& path, const DatasetFile& d) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  const std::vector<double> raw(d.theta_raw.begin(), d.theta_raw.end());
  const std::vector<double> proc(d.theta_proc.begin(), d.theta_proc.end());
  os << nlohmann::json{{"problem", d.problem}, {"theta_raw", raw}, {"theta_proc", proc}, {"n", d.x.rows()}}.dump()
     << '\n';
  os.precision(17);
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.x.cols(); ++j) os << (j ? "," : "") << d.x(i, j);
    os << '\n';
  }
  if (!os) throw IoError("short write to " + path.string());
}

inline DatasetFile read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read dataset " + path.string());
  std::string line;
  std::getline(is, line);
  DatasetFile d;
  long n = 0;
  try {
    const auto header = nlohmann::json::parse(line);
    d.problem = header.at("problem").get<std::string>();
    const auto raw = header.value("theta_raw", std::vector<double>{});
    const auto proc = header.value("theta_proc", std::vector<double>{});
    d.theta_raw = Eigen::Map<const Eigen::VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size()));
    d.theta_proc = Eigen::Map<const Eigen::VectorXd>(proc.data(), static_cast<Eigen::Index>(proc.size()));
    n = header.at("n").get<long>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": bad dataset header: " + e.what());
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ": not a number: " + cell);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ShapeError(path.string() + ": ragged row " + std::to_string(rows.size() + 1));
    rows.push_back(std::move(row));
  }
  if (static_cast<long>(rows.size()) != n)
    throw ShapeError(path.string() + ": header says " + std::to_string(n) + " rows, found " + std::to_string(rows.size()));
  const auto cols = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  d.x.resize(static_cast<Eigen::Index>(rows.size()), cols);
  for (Eigen::Index i = 0; i < d.x.rows(); ++i)
    for (Eigen::Index j = 0; j < cols; ++j) d.x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return d;
}

}  // namespace npe::harness
