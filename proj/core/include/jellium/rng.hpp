#pragma once

#include <cstdint>
#include <string_view>

#include "jellium/numeric.hpp"

namespace jellium {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// 64-bit FNV-1a, used to turn experiment names into stream ids.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based stream: output i is mix64(key + i * golden), where the key
/// hashes (seed, experiment, replica). Replica streams depend only on those
/// three numbers, never on scheduling.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t experiment, std::uint64_t replica) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t replica() const noexcept { return replica_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept {
    return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
  }
  /// [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  /// (0, 1).
  double uniform_open() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  double normal() noexcept;
  /// Standard complex Gaussian, E|xi|^2 = 1.
  Complex complex_normal() noexcept;

  /// Independent child stream (e.g. one per conditional draw family).
  RngStream child(std::uint64_t id) const noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t seed_;
  std::uint64_t replica_;
  std::uint64_t counter_ = 0;
};

}  // namespace jellium
