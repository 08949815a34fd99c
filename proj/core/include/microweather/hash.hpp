#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace mw {

/// CRC-32 (IEEE 802.3, reflected, init/xorout 0xFFFFFFFF).
std::uint32_t crc32(std::span<const std::byte> data, std::uint32_t crc = 0) noexcept;

std::uint64_t fnv1a64(std::span<const std::byte> data) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// Lower-case 16-digit hex of a 64-bit value.
std::string hex64(std::uint64_t v);

/// splitmix64 finalizer; used to derive independent streams from a seed.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Uniform double in [0, 1) from 64 random bits.
constexpr double unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace mw
