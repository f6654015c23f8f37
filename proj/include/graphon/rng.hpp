#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace graphon {

using Engine = std::mt19937_64;

/// Mixes a master seed with a stage label and an index into an independent
/// stream seed. Streams for different (label, index) pairs do not overlap in
/// practice and do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index = 0);

inline Engine make_engine(std::uint64_t master, std::string_view label,
                          std::uint64_t index = 0) {
  return Engine(derive_seed(master, label, index));
}

/// Uniform double in [0, 1) with 53 random bits. Portable across standard
/// libraries, unlike std::uniform_real_distribution.
inline double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller, portable across standard libraries.
double standard_normal(Engine& rng);

/// 64-bit FNV-1a, used for config hashing.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace graphon
