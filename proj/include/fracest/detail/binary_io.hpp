#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "fracest/core/errors.hpp"

namespace fracest::io {

// Little-endian encoding of fixed-width scalars, independent of host order.
template <class T>
  requires std::is_arithmetic_v<T>
void write_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  auto bits = std::bit_cast<U>(value);
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <class T>
  requires std::is_arithmetic_v<T>
T read_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  std::array<char, sizeof(T)> bytes{};
  if (!in.read(bytes.data(), bytes.size())) throw CorruptFileError("unexpected end of file");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bits |= static_cast<U>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  }
  return std::bit_cast<T>(bits);
}

inline void write_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

inline void expect_magic(std::istream& in, const char (&magic)[5], const std::string& what) {
  char buf[4]{};
  if (!in.read(buf, 4)) throw CorruptFileError(what + ": file too short for header");
  if (std::memcmp(buf, magic, 4) != 0) throw CorruptFileError(what + ": bad magic");
}

/// Running FNV-1a 64 over a byte range.
inline std::uint64_t fnv1a(const char* data, std::size_t size,
                           std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= static_cast<unsigned char>(data[i]);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace fracest::io
