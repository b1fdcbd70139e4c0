#pragma once

#include "sugarl/nn/checkpoint.hpp"

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

#ifndef SUGARL_VERSION
#define SUGARL_VERSION "0.1.0"
#endif

namespace sugarl::cli {

inline std::string version_string() { return SUGARL_VERSION; }

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version = version_string();
  double wall_seconds = 0.0;
  std::string finished_utc;
  std::vector<std::filesystem::path> artifacts;  // relative to the manifest's directory
};

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string manifest_text(const RunManifest& m) {
  std::string out;
  out += "command = " + m.command + "\n";
  out += "config_hash = " + m.config_hash + "\n";
  out += "seed = " + std::to_string(m.seed) + "\n";
  out += "version = " + m.version + "\n";
  out += "wall_seconds = " + std::to_string(m.wall_seconds) + "\n";
  out += "finished_utc = " + m.finished_utc + "\n";
  for (const auto& a : m.artifacts) out += "artifact = " + a.generic_string() + "\n";
  return out;
}

/// Written last, via rename, so a present manifest means a complete run.
inline void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  nn::write_file_atomic(path, manifest_text(m));
}

}  // namespace sugarl::cli
