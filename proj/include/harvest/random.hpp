#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace harvest {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed for work item `index` of component `label`. Depends only on
/// its arguments, so scheduling and worker count never change results.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view label,
                                    std::uint64_t index = 0) {
  return mix64(mix64(root ^ fnv1a(label)) + mix64(index));
}

inline Rng make_rng(std::uint64_t root, std::string_view label, std::uint64_t index = 0) {
  return Rng(derive_seed(root, label, index));
}

}  // namespace harvest
