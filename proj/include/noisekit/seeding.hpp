#pragma once

#include <bit>
#include <cstdint>
#include <string_view>

namespace noisekit {

// Deterministic seed derivation used by the sweep harness. Every random
// stream in a sweep is keyed by a chain of splitmix64 steps over the cell
// coordinates, so changing one axis value never perturbs any other cell:
//
//   seed = mix(...mix(mix(master, hash(purpose)), hash(axis_1))..., hash(axis_n))
//
// with mix(h, v) = splitmix64(h ^ v), string axes hashed with FNV-1a 64 and
// doubles keyed by their IEEE-754 bit pattern.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t seed_mix(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ v);
}

inline std::uint64_t seed_key(std::string_view s) { return fnv1a64(s); }
inline std::uint64_t seed_key(double v) { return std::bit_cast<std::uint64_t>(v); }
inline std::uint64_t seed_key(std::uint64_t v) { return v; }
inline std::uint64_t seed_key(std::int64_t v) { return static_cast<std::uint64_t>(v); }
inline std::uint64_t seed_key(int v) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(v)); }

template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose, const Parts&... parts) {
  std::uint64_t h = seed_mix(master, fnv1a64(purpose));
  ((h = seed_mix(h, seed_key(parts))), ...);
  return h;
}

}  // namespace noisekit
