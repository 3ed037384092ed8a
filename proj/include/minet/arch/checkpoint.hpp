#pragma once

#include <filesystem>
#include <iosfwd>

#include "minet/arch/config.hpp"
#include "minet/arch/params.hpp"

namespace minet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// MINT container, little-endian:
///   "MINT", u32 version,
///   u32-length UTF-8 manifest, one "name rank d0 d1 ..." line per tensor,
///   u32-length UTF-8 config as key=value lines,
///   f64 payloads concatenated in manifest order.
struct Checkpoint {
  MINetConfig config;
  KeyValues settings;  // every config key, model and non-model
  Params params;
};

void write_checkpoint(std::ostream& out, const MINetConfig& config, const Params& params, const KeyValues& extra = {});
/// Validates the manifest against the parameter layout implied by the stored config.
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const MINetConfig& config, const Params& params,
                     const KeyValues& extra = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace minet
