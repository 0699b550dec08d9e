#pragma once

#include <charconv>
#include <cstdint>
#include <string>

namespace glmtensor {

/// Shortest round-trip decimal rendering of a double (at most 17 significant
/// digits). Output files depend on this being platform-stable.
inline std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

/// FNV-1a 64-bit hash, rendered as 16 hex digits; used to stamp output files
/// with the resolved configuration they came from.
inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf, 16);
}

}  // namespace glmtensor
