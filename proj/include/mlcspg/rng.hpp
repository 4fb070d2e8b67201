#pragma once

#include <cstdint>

namespace mlcspg {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based uniform draw on the open interval (0, 1).
///
/// The value depends only on (seed, stream, index, coord), so any point of
/// any batch can be regenerated independently of evaluation order or thread
/// count. `stream` separates independent batches (levels, test sets).
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                                 std::uint64_t coord) noexcept {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ stream);
  h = mix64(h ^ index);
  h = mix64(h ^ coord);
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace mlcspg
