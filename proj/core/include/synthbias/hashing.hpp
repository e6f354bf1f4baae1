#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace synthbias {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

// 64-bit finalizer from SplitMix64; used to derive independent RNG streams.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over bytes, then mixed. Stable across platforms and runs.
std::uint64_t hash_string(std::string_view s);

// Combine a base seed with further stream identifiers.
constexpr std::uint64_t derive_seed(std::uint64_t base) { return mix64(base); }

template <typename... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t next,
                                    Rest... rest) {
  return derive_seed(mix64(base ^ mix64(next)), static_cast<std::uint64_t>(rest)...);
}

}  // namespace synthbias
