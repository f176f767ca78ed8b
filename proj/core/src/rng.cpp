#include "jellium/rng.hpp"

#include <cmath>

namespace jellium {
namespace {
__extension__ typedef unsigned __int128 u128;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t experiment, std::uint64_t replica) noexcept
    : seed_(seed), replica_(replica) {
  std::uint64_t k = mix64(seed ^ 0x243f6a8885a308d3ULL);
  k = mix64(k ^ (experiment + 0x13198a2e03707344ULL));
  k = mix64(k ^ (replica + 0xa4093822299f31d0ULL));
  key_ = k;
}

RngStream RngStream::child(std::uint64_t id) const noexcept {
  RngStream out(key_, id, 0x5851f42d4c957f2dULL);
  out.seed_ = seed_;
  out.replica_ = replica_;
  return out;
}

std::uint64_t RngStream::below(std::uint64_t n) noexcept {
  // Lemire's multiply-shift with rejection of the biased low range
  std::uint64_t x = next_u64();
  u128 m = static_cast<u128>(x) * n;
  std::uint64_t low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t t = -n % n;
    while (low < t) {
      x = next_u64();
      m = static_cast<u128>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::normal() noexcept {
  const double r = std::sqrt(-2.0 * std::log(uniform_open()));
  return r * std::cos(2.0 * kPi * uniform());
}

Complex RngStream::complex_normal() noexcept {
  const double r = std::sqrt(-std::log(uniform_open()));
  return std::polar(r, 2.0 * kPi * uniform());
}

}  // namespace jellium
