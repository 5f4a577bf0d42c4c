#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "stsvd/framestack.hpp"

namespace stsvd {

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs one command line (args exclude the program name). Returns the process
/// exit code: 0 ok, 2 usage, 3 validation, 4 I/O.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// ---- image export ---------------------------------------------------------

enum class MipAxis { T, X, Z };

MipAxis parse_mip_axis(const std::string& name);

/// Grayscale image, row-major, `width` x `height`.
struct Gray8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
};

/// Magnitude view of frame t laid out for display: rows are z, columns are x.
Image display_frame(const FrameStack& fs, std::size_t t);

/// Maximum of |sample| over one axis, laid out for display:
///   T -> rows z, cols x;  X -> rows z, cols t;  Z -> rows t, cols x.
Image display_mip(const FrameStack& fs, MipAxis axis);

/// 20 log10(|v| / peak) clipped to [-range_db, 0] and mapped linearly onto
/// 0..255. An all-zero image maps to all zeros.
Gray8 log_compress(const Image& magnitude, double range_db);

void write_pgm(const std::filesystem::path& path, const Gray8& img);
Gray8 read_pgm(const std::filesystem::path& path);

// ---- run manifests ----------------------------------------------------------

struct RunManifest {
  std::string command;
  nlohmann::json params;   // every resolved flag, defaults included
  nlohmann::json seeds;    // name -> value
  nlohmann::json inputs;   // role -> path
  nlohmann::json outputs;  // role -> path
  nlohmann::json results;  // command-specific facts (chosen rank, timings)
  std::string version = kToolVersion;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

/// `<stem>.manifest.json` next to the primary output.
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

void write_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace stsvd
