#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cpb {

using Engine = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent per-instance seeds.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Engine make_engine(std::uint64_t master, std::uint64_t index) {
  return Engine(mix_seed(master, index));
}

// Uniform on the open interval (0,1), platform independent.
inline double uniform01(Engine& eng) {
  return (static_cast<double>(eng() >> 11) + 0.5) * 0x1p-53;
}

inline double uniform(Engine& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(eng);
}

// Integer in [lo, hi].
inline long uniform_int(Engine& eng, long lo, long hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<long>(eng() % span);
}

inline double standard_exponential(Engine& eng) {
  return -std::log(uniform01(eng));
}

} // namespace cpb
