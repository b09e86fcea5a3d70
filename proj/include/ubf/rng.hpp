#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ubf {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Independent child seed for a named stream, so every stage draws from its own generator.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return splitmix64(splitmix64(seed ^ h) + index);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

}  // namespace ubf
