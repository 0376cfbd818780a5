#ifndef REWARDLOOP_RANDOM_HPP
#define REWARDLOOP_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rewardloop {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a path of integer labels, so every
/// component (benchmark, training, each generated sample, each particle) owns an
/// independent, reproducible stream.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = mix64(parent);
  for (std::uint64_t label : path) s = mix64(s ^ mix64(label + 0x632be59bd9b4e019ULL));
  return s;
}

inline std::mt19937_64 make_rng(std::uint64_t parent, std::initializer_list<std::uint64_t> path) {
  return std::mt19937_64(derive_seed(parent, path));
}

}  // namespace rewardloop

#endif  // REWARDLOOP_RANDOM_HPP
