#pragma once

#include <cstdint>
#include <string_view>

namespace fbmlab {

/// SplitMix64 finalizer; a bijective 64-bit avalanche mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of the independent substream used for noise mode `mode`.
constexpr std::uint64_t mode_seed(std::uint64_t seed, std::uint64_t mode) noexcept {
  return seed ^ mix64(mode + 1);
}

/// Derive a subsystem seed from a master seed and a label such as "fbm" or
/// "replica:17". Adding new labels never perturbs existing ones.
constexpr std::uint64_t labeled_seed(std::uint64_t master, std::string_view label) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return mix64(master ^ mix64(h));
}

}  // namespace fbmlab
