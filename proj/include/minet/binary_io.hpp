#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

#include "minet/tensor.hpp"

// Little-endian primitives shared by the MNT1 and MINT containers.
namespace minet::io {

template <typename T>
  requires std::is_trivially_copyable_v<T>
void write_le(std::ostream& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(bytes, sizeof(T));
}

template <typename T>
  requires std::is_trivially_copyable_v<T>
T read_le(std::istream& in, std::string_view what) {
  char bytes[sizeof(T)];
  if (!in.read(bytes, sizeof(T))) throw FormatError("truncated input while reading " + std::string(what));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void expect_magic(std::istream& in, std::string_view magic) {
  std::string got(magic.size(), '\0');
  if (!in.read(got.data(), static_cast<std::streamsize>(got.size())))
    throw FormatError("truncated input: missing " + std::string(magic) + " magic");
  if (got != magic) throw FormatError("bad magic: expected " + std::string(magic));
}

/// u32 byte length followed by UTF-8 bytes.
inline void write_string(std::ostream& out, std::string_view text) {
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

inline std::string read_string(std::istream& in, std::string_view what, std::size_t limit = 1u << 26) {
  const auto length = read_le<std::uint32_t>(in, what);
  if (length > limit) throw FormatError("implausible string length in " + std::string(what));
  std::string text(length, '\0');
  if (length > 0 && !in.read(text.data(), length)) throw FormatError("truncated input in " + std::string(what));
  return text;
}

}  // namespace minet::io
