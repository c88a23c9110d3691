#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <ostream>

namespace ccgl {

/// Appends `value` rounded to float32, little-endian.
inline void put_f32le(std::ostream& out, double value) {
  const float f = static_cast<float>(value);
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  out.write(reinterpret_cast<const char*>(&bits), 4);
}

/// Decodes 4 little-endian bytes as float32.
inline float get_f32le(const char* bytes) {
  std::uint32_t bits;
  std::memcpy(&bits, bytes, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace ccgl
