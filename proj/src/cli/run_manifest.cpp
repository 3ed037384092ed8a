#include "minet/cli/run_manifest.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "minet/ops.hpp"
#include "minet/random.hpp"

#ifndef MINET_VERSION
#define MINET_VERSION "0.0.0"
#endif
#ifndef MINET_GIT_REVISION
#define MINET_GIT_REVISION "unknown"
#endif

namespace minet {

namespace fs = std::filesystem;

std::string version_stamp() { return std::string(MINET_VERSION) + "+" + MINET_GIT_REVISION; }

std::string format_manifest(const RunManifest& m) {
  std::ostringstream out;
  out << "command=" << m.command << '\n'
      << "seed=" << m.seed << '\n'
      << "version=" << m.version << '\n'
      << "started=" << m.started << '\n'
      << "duration_s=" << format_double(m.duration_s) << '\n';
  for (const auto& [k, v] : m.config) out << "config." << k << '=' << v << '\n';
  for (const auto& a : m.artifacts) out << "artifact=" << a << '\n';
  return out.str();
}

RunManifest parse_manifest(const std::string& text) {
  RunManifest m;
  m.version.clear();
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("manifest line without '=': " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "command")
      m.command = value;
    else if (key == "seed")
      m.seed = parse_u64(key, value);
    else if (key == "version")
      m.version = value;
    else if (key == "started")
      m.started = value;
    else if (key == "duration_s")
      m.duration_s = parse_double(key, value);
    else if (key == "artifact")
      m.artifacts.push_back(value);
    else if (key.starts_with("config."))
      m.config[key.substr(7)] = value;
    else
      throw FormatError("unknown manifest key '" + key + "'");
  }
  return m;
}

void write_manifest(const fs::path& dir, const RunManifest& m) {
  fs::create_directories(dir);
  std::ofstream out(dir / kManifestName, std::ios::binary);
  out << format_manifest(m);
  if (!out) throw std::runtime_error("failed writing " + (dir / kManifestName).string());
}

RunManifest read_manifest(const fs::path& dir) {
  std::ifstream in(dir / kManifestName, std::ios::binary);
  if (!in) throw std::runtime_error("no manifest in " + dir.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_manifest(text.str());
}

fs::path run_root() {
  const char* env = std::getenv("MINET_RUN_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

fs::path default_run_dir(const std::string& command, const KeyValues& config) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a(command + '\n' + format_key_values(config))));
  return run_root() / (command + "-" + hex);
}

std::vector<std::string> list_artifacts(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != kManifestName)
      out.push_back(fs::relative(e.path(), dir).generic_string());
  std::sort(out.begin(), out.end());
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace minet
