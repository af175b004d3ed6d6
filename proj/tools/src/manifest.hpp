#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pll::cli {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
// 16 lowercase hex digits of fnv1a64 over the file contents.
std::string file_digest(const std::filesystem::path& path);

struct ManifestEntry {
  std::string stage;
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  std::vector<std::pair<std::string, std::string>> overrides;
};

// One line: stage=.. seed=.. inputs=name:hash,... outputs=name:hash,... overrides=flag=value,...
// Files are named by their file name only so runs in different directories compare equal.
std::string format_entry(const ManifestEntry& e);

void append_manifest(const std::filesystem::path& out_dir, const ManifestEntry& e);

inline constexpr const char* kManifestName = "manifest.log";

}  // namespace pll::cli
