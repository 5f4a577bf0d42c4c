#include <fstream>

#include "stsvd/cli.hpp"
#include "stsvd/error.hpp"

namespace stsvd {

nlohmann::json RunManifest::to_json() const {
  return {{"command", command}, {"params", params},   {"seeds", seeds},    {"inputs", inputs},
          {"outputs", outputs}, {"results", results}, {"version", version}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.params = j.at("params");
    m.seeds = j.value("seeds", nlohmann::json::object());
    m.inputs = j.value("inputs", nlohmann::json::object());
    m.outputs = j.value("outputs", nlohmann::json::object());
    m.results = j.value("results", nlohmann::json::object());
    m.version = j.value("version", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("run manifest: ") + e.what());
  }
  if (!m.params.is_object()) throw Error(ErrorKind::Parse, "run manifest: 'params' must be an object");
  return m;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  auto p = output;
  p.replace_extension(".manifest.json");
  return p;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << m.to_json().dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, "manifest " + path.string() + ": " + e.what());
  }
  return RunManifest::from_json(j);
}

}  // namespace stsvd
