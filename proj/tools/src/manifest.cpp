#include "manifest.hpp"

#include <cstdio>
#include <fstream>

#include "pll/error.hpp"
#include "pll/io.hpp"

namespace pll::cli {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string file_digest(const std::filesystem::path& path) {
  const auto bytes = io::read_file_bytes(path);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

namespace {

std::string file_list(const std::vector<std::filesystem::path>& files) {
  if (files.empty()) return "-";
  std::string out;
  for (const auto& f : files) {
    if (!out.empty()) out += ',';
    out += f.filename().string() + ":" + file_digest(f);
  }
  return out;
}

}  // namespace

std::string format_entry(const ManifestEntry& e) {
  std::string line = "stage=" + e.stage + " seed=" + std::to_string(e.seed);
  line += " inputs=" + file_list(e.inputs);
  line += " outputs=" + file_list(e.outputs);
  line += " overrides=";
  if (e.overrides.empty()) line += "-";
  for (std::size_t i = 0; i < e.overrides.size(); ++i) {
    if (i) line += ',';
    line += e.overrides[i].first + "=" + e.overrides[i].second;
  }
  return line;
}

void append_manifest(const std::filesystem::path& out_dir, const ManifestEntry& e) {
  const auto line = format_entry(e);
  std::ofstream out(out_dir / kManifestName, std::ios::app | std::ios::binary);
  if (!out) throw FormatError("cannot write " + (out_dir / kManifestName).string());
  out << line << '\n';
}

}  // namespace pll::cli
