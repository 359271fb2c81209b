#pragma once

#include <charconv>
#include <cstdint>
#include <string>

namespace sdae {

/// Shortest decimal representation that parses back to exactly the same
/// double. Used for all CSV output so files round-trip bit-exactly.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::string format_u64(std::uint64_t x) { return std::to_string(x); }

}  // namespace sdae
