#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "npe/nets/layers.hpp"

namespace npe::harness {

/// Everything besides the weights needed to resume or reproduce a run.
struct CheckpointState {
  nlohmann::json config = nlohmann::json::object();
  std::string rng_state;
  long step = 0;
};

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kWeightsFile = "weights.bin";

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  // Write then rename so a crash never leaves a half-written file under the final name.
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp.string());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace " + path.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CorruptCheckpoint("missing " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline void put_f32(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
}

inline float get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return std::bit_cast<float>(bits);
}

}  // namespace detail

/// Writes `dir/manifest.json` and `dir/weights.bin` (little-endian f32, row-major,
/// tensors concatenated in parameter order).
template <class S>
void save_checkpoint(const std::filesystem::path& dir, const nets::ParamList<S>& params, const CheckpointState& state) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json tensors = nlohmann::json::array();
  std::string blob;
  for (const auto* p : params) {
    tensors.push_back({{"name", p->name}, {"shape", {p->value.rows(), p->value.cols()}}, {"dtype", "f32"}});
    for (Eigen::Index r = 0; r < p->value.rows(); ++r)
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) detail::put_f32(blob, static_cast<float>(p->value(r, c)));
  }
  const nlohmann::json manifest = {{"tensors", tensors},
                                   {"config", state.config},
                                   {"rng_state", state.rng_state},
                                   {"step", state.step},
                                   {"weights_bytes", blob.size()}};
  detail::write_file(dir / kWeightsFile, blob);
  detail::write_file(dir / kManifestFile, manifest.dump(2) + "\n");
}

/// Loads weights into `params` (same architecture, same order). All checks run
/// before any parameter is written, so a failed load leaves the model untouched.
template <class S>
CheckpointState load_checkpoint(const std::filesystem::path& dir, const nets::ParamList<S>& params) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(detail::read_file(dir / kManifestFile));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint("unreadable manifest: " + std::string(e.what()));
  }
  const std::string blob = detail::read_file(dir / kWeightsFile);
  try {
    const auto& tensors = manifest.at("tensors");
    if (tensors.size() != params.size())
      throw ShapeError("checkpoint has " + std::to_string(tensors.size()) + " tensors, model has " +
                       std::to_string(params.size()));
    std::size_t expected = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& t = tensors[i];
      const auto name = t.at("name").get<std::string>();
      const auto rows = t.at("shape").at(0).get<Eigen::Index>();
      const auto cols = t.at("shape").at(1).get<Eigen::Index>();
      if (t.at("dtype").get<std::string>() != "f32") throw CorruptCheckpoint("tensor " + name + " is not f32");
      if (name != params[i]->name)
        throw ShapeError("tensor " + std::to_string(i) + " is " + name + ", model expects " + params[i]->name);
      if (rows != params[i]->value.rows() || cols != params[i]->value.cols())
        throw ShapeError("tensor " + name + " has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                         ", model expects " + std::to_string(params[i]->value.rows()) + "x" +
                         std::to_string(params[i]->value.cols()));
      expected += static_cast<std::size_t>(rows * cols) * 4;
    }
    if (blob.size() != expected || manifest.value("weights_bytes", expected) != expected)
      throw CorruptCheckpoint("weights file holds " + std::to_string(blob.size()) + " bytes, manifest describes " +
                              std::to_string(expected));

    std::vector<nets::Matrix<S>> staged;
    staged.reserve(params.size());
    const char* cursor = blob.data();
    for (const auto* p : params) {
      nets::Matrix<S> m(p->value.rows(), p->value.cols());
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c, cursor += 4) m(r, c) = static_cast<S>(detail::get_f32(cursor));
      staged.push_back(std::move(m));
    }
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = std::move(staged[i]);

    CheckpointState state;
    state.config = manifest.at("config");
    state.rng_state = manifest.at("rng_state").get<std::string>();
    state.step = manifest.at("step").get<long>();
    return state;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint("malformed manifest: " + std::string(e.what()));
  }
}

}  // namespace npe::harness
