#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "minet/arch/config.hpp"

namespace minet {

/// Build stamp: project version plus the git revision seen at configure time.
std::string version_stamp();

struct RunManifest {
  std::string command;                 // full argv joined by spaces
  KeyValues config;                    // effective configuration
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;  // paths relative to the run directory
  double duration_s = 0.0;
  std::string version = version_stamp();
  std::string started;                 // UTC ISO-8601, the only non-reproducible field
};

inline constexpr const char* kManifestName = "manifest.txt";

/// key=value text: command, seed, version, started, duration_s, then
/// config.<key> lines and artifact=<path> lines in order.
std::string format_manifest(const RunManifest& m);
RunManifest parse_manifest(const std::string& text);

void write_manifest(const std::filesystem::path& dir, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& dir);

/// $MINET_RUN_ROOT, or "runs" when unset or empty.
std::filesystem::path run_root();
/// <root>/<command>-<16 hex digits of the config hash>.
std::filesystem::path default_run_dir(const std::string& command, const KeyValues& config);

/// Regular files under `dir` other than the manifest, sorted, relative to dir.
std::vector<std::string> list_artifacts(const std::filesystem::path& dir);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace minet
