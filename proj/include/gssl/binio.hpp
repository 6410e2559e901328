#pragma once

// Little-endian scalar I/O, independent of host byte order.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "gssl/error.hpp"

namespace gssl::binio {

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  if constexpr (std::is_floating_point_v<T>) {
    static_assert(sizeof(T) == 4);
    auto bits = std::bit_cast<std::uint32_t>(v);
    for (std::size_t i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  } else {
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

/// Throws InputError("<where>: truncated") on short reads.
template <typename T>
T get_le(std::istream& in, const std::string& where) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw InputError(where + ": truncated");
  if constexpr (std::is_floating_point_v<T>) {
    static_assert(sizeof(T) == 4);
    std::uint32_t bits = 0;
    for (std::size_t i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return std::bit_cast<float>(bits);
  } else {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
  }
}

}  // namespace gssl::binio
