#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace minet {

enum class Variant { full, no_aux, no_int, no_att };

std::string_view variant_name(Variant v);
/// Throws ConfigError for unknown names.
Variant parse_variant(std::string_view name);

struct MINetConfig {
  std::size_t groups = 3;     // L
  std::size_t channels = 16;  // C
  std::size_t blocks = 2;     // residual blocks per group
  std::size_t scale = 2;      // r
  std::size_t reduction = 4;  // channel-attention reduction ratio
  double alpha = 0.3;         // T2 loss weight
  double beta = 0.7;          // T1 loss weight
  Variant variant = Variant::full;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;

  bool uses_t1() const { return variant != Variant::no_aux; }
  bool uses_integration() const { return variant != Variant::no_int; }
  bool uses_attention() const { return variant != Variant::no_att; }
  /// Stage features fed to the integration module (2L, or L without the T1 branch).
  std::size_t integrated_stages() const { return uses_t1() ? 2 * groups : groups; }
};

/// Flat "key=value" lines; '#' starts a comment, blank lines are skipped.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::string_view text);
std::string format_key_values(const KeyValues& kv);

/// Keys: L, C, blocks, r, reduction, alpha, beta, variant. Unknown keys are left to the caller.
void apply_model_keys(MINetConfig& config, const KeyValues& kv);
KeyValues model_keys(const MINetConfig& config);

std::size_t parse_size(std::string_view key, std::string_view value);
std::uint64_t parse_u64(std::string_view key, std::string_view value);
double parse_double(std::string_view key, std::string_view value);
/// Round-trip exact decimal form (17 significant digits).
std::string format_double(double v);

}  // namespace minet
