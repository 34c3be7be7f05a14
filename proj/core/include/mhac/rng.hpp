#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mhac {

std::uint64_t splitmix64(std::uint64_t x);

// Counter-style stream derivation: the same (seed, keys...) always yields the
// same stream, independent of how many other streams were drawn before it.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

inline std::mt19937_64 make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys = {}) {
  return std::mt19937_64(derive_seed(seed, keys));
}

}  // namespace mhac
