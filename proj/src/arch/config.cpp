#include "minet/arch/config.hpp"

#include <charconv>
#include <sstream>

#include "minet/ops.hpp"

namespace minet {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_aux: return "no_aux";
    case Variant::no_int: return "no_int";
    case Variant::no_att: return "no_att";
  }
  return "full";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::full, Variant::no_aux, Variant::no_int, Variant::no_att})
    if (variant_name(v) == name) return v;
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected full, no_aux, no_int or no_att)");
}

void MINetConfig::validate() const {
  if (groups < 1) throw ConfigError("config: L must be >= 1");
  if (channels < 1) throw ConfigError("config: C must be >= 1");
  if (reduction < 1 || channels % reduction != 0)
    throw ConfigError("config: C = " + std::to_string(channels) + " is not divisible by reduction " +
                      std::to_string(reduction));
  if (scale != 2 && scale != 4) throw ConfigError("config: r must be 2 or 4, got " + std::to_string(scale));
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(alpha + beta > 0.0))
    throw ConfigError("config: loss weights need alpha >= 0, beta >= 0, alpha + beta > 0");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value, got '" + std::string(line) +
                        "'");
    kv[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  return kv;
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::size_t parse_size(std::string_view key, std::string_view value) {
  std::size_t out = 0;
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || end != value.data() + value.size())
    throw ConfigError("config: " + std::string(key) + " expects a non-negative integer, got '" + std::string(value) +
                      "'");
  return out;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::uint64_t parse_u64(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || end != value.data() + value.size())
    throw ConfigError("config: " + std::string(key) + " expects an unsigned 64-bit integer, got '" +
                      std::string(value) + "'");
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const double out = std::stod(std::string(value), &used);
    if (used == value.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: " + std::string(key) + " expects a number, got '" + std::string(value) + "'");
}

void apply_model_keys(MINetConfig& c, const KeyValues& kv) {
  for (const auto& [k, v] : kv) {
    if (k == "L") c.groups = parse_size(k, v);
    else if (k == "C") c.channels = parse_size(k, v);
    else if (k == "blocks") c.blocks = parse_size(k, v);
    else if (k == "r") c.scale = parse_size(k, v);
    else if (k == "reduction") c.reduction = parse_size(k, v);
    else if (k == "alpha") c.alpha = parse_double(k, v);
    else if (k == "beta") c.beta = parse_double(k, v);
    else if (k == "variant") c.variant = parse_variant(v);
  }
}

KeyValues model_keys(const MINetConfig& c) {
  return {{"L", std::to_string(c.groups)},
          {"C", std::to_string(c.channels)},
          {"blocks", std::to_string(c.blocks)},
          {"r", std::to_string(c.scale)},
          {"reduction", std::to_string(c.reduction)},
          {"alpha", format_double(c.alpha)},
          {"beta", format_double(c.beta)},
          {"variant", std::string(variant_name(c.variant))}};
}

}  // namespace minet
