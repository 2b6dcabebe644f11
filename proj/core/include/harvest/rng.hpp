#pragma once

#include <cstdint>
#include <random>

namespace harvest {

using RngStream = std::mt19937_64;

/// splitmix64 finaliser; used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for an independent sub-stream identified by (seed, index, salt).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index,
                                    std::uint64_t salt = 0) {
  return mix64(mix64(seed ^ mix64(salt)) + index);
}

inline RngStream make_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0) {
  return RngStream(derive_seed(seed, index, salt));
}

}  // namespace harvest
