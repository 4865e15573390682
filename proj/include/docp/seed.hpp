#pragma once

#include <cstdint>
#include <random>

namespace docp {

enum class Channel : std::uint8_t { Gradient = 0, HessianNoise = 1, Probe = 2 };

/// Addresses one independent random stream. Equal triples give equal draws.
struct BatchSeed {
  std::uint64_t base_seed = 0;
  std::int64_t step_index = 0;
  Channel channel = Channel::Gradient;

  friend bool operator==(const BatchSeed&, const BatchSeed&) = default;
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Mixes a parent seed with a tag into a statistically unrelated child seed.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) noexcept {
  return detail::splitmix64(detail::splitmix64(parent) ^ detail::splitmix64(tag + 0x632be59bd9b4e019ULL));
}

inline std::mt19937_64 make_engine(const BatchSeed& seed) {
  std::uint64_t s = derive_seed(seed.base_seed, static_cast<std::uint64_t>(seed.step_index));
  s = derive_seed(s, static_cast<std::uint64_t>(seed.channel) + 1);
  return std::mt19937_64(s);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) { return std::mt19937_64(detail::splitmix64(seed)); }

}  // namespace docp
