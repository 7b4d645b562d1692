#pragma once

#include <cstdint>
#include <random>

namespace pencrit {

/// Identifies one reproducible random stream. Distinct (seed, stream_id) pairs feed
/// distinct seed sequences into the engine.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  [[nodiscard]] std::mt19937_64 engine() const;
  friend bool operator==(const RngStream&, const RngStream&) = default;
};

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream id for (cell, replication).
[[nodiscard]] constexpr std::uint64_t derive_stream_id(std::uint64_t cell, std::uint64_t replication) noexcept {
  return mix64(mix64(cell) ^ (replication + 0x632be59bd9b4e019ULL));
}

}  // namespace pencrit
