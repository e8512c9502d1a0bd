#include "synse/manifest.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "synse/config.hpp"
#include "synse/container.hpp"

namespace synse {

using json = nlohmann::ordered_json;

std::string file_hash(const std::filesystem::path& path) { return hex64(fnv1a(read_file(path))); }

std::filesystem::path manifest_path(const std::filesystem::path& out_dir, const std::string& stage) {
  return out_dir / (stage + ".manifest.json");
}

void write_manifest(const std::filesystem::path& out_dir, Manifest m,
                    const std::vector<std::string>& files) {
  for (const auto& f : files) m.files[f] = file_hash(out_dir / f);
  json j{{"stage", m.stage},
         {"config_hash", m.config_hash},
         {"seed", m.seed},
         {"version", m.version},
         {"files", m.files}};
  write_file(manifest_path(out_dir, m.stage), j.dump(2) + "\n");
}

Manifest read_manifest(const std::filesystem::path& path) {
  try {
    const json j = json::parse(read_file(path));
    Manifest m;
    m.stage = j.at("stage").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.version = j.at("version").get<std::string>();
    m.files = j.at("files").get<std::map<std::string, std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, path.string() + ": malformed manifest: " + e.what());
  }
}

std::vector<Manifest> read_manifests(const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> paths;
  if (!std::filesystem::is_directory(out_dir)) {
    throw Error(ErrorKind::Io, "output directory not found: " + out_dir.string());
  }
  for (const auto& e : std::filesystem::directory_iterator(out_dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() > 14 && name.ends_with(".manifest.json")) paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<Manifest> out;
  for (const auto& p : paths) out.push_back(read_manifest(p));
  return out;
}

std::vector<std::string> verify_manifest(const std::filesystem::path& out_dir, const Manifest& m) {
  std::vector<std::string> problems;
  for (const auto& [rel, hash] : m.files) {
    const auto p = out_dir / rel;
    if (!std::filesystem::exists(p)) {
      problems.push_back(m.stage + ": missing " + rel);
    } else if (file_hash(p) != hash) {
      problems.push_back(m.stage + ": content hash mismatch for " + rel);
    }
  }
  return problems;
}

}  // namespace synse
