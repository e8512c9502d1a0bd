#pragma once

// Per-stage provenance record: which config (by hash) and seed produced which
// files, with a content hash per file so `inspect` can detect tampering.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace synse {

inline constexpr const char* kVersion = "synse 1.0.0";

struct Manifest {
  std::string stage;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::map<std::string, std::string> files;  // path relative to the output dir -> content hash

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

std::string file_hash(const std::filesystem::path& path);
std::filesystem::path manifest_path(const std::filesystem::path& out_dir, const std::string& stage);

// Hashes `files` (relative to out_dir) and writes <out_dir>/<stage>.manifest.json.
void write_manifest(const std::filesystem::path& out_dir, Manifest manifest,
                    const std::vector<std::string>& files);
Manifest read_manifest(const std::filesystem::path& path);
std::vector<Manifest> read_manifests(const std::filesystem::path& out_dir);

// One human-readable line per missing or altered file; empty when intact.
std::vector<std::string> verify_manifest(const std::filesystem::path& out_dir, const Manifest& m);

}  // namespace synse
