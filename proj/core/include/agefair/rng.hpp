#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace agefair {

using Rng = std::mt19937_64;

// 64-bit FNV-1a over the bytes of `tag`.
constexpr std::uint64_t fnv1a64(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream splitting rule: stream_seed = splitmix64(seed ^ fnv1a64(tag)).
// Each component draws from its own tagged stream, so adding a new tag never
// shifts the draws seen by existing ones.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::string_view tag) {
  return splitmix64(seed ^ fnv1a64(tag));
}

inline Rng make_stream(std::uint64_t seed, std::string_view tag) {
  return Rng{stream_seed(seed, tag)};
}

// Derived stream for the i-th member of a family (e.g. per-run seeds).
inline Rng make_stream(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
  return Rng{splitmix64(stream_seed(seed, tag) + index)};
}

}  // namespace agefair
