#pragma once

#include <cstdint>
#include <random>

namespace softrank {

using Rng = std::mt19937_64;

namespace detail {

// splitmix64 finalizer; decorrelates nearby seed values.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

inline Rng make_rng(std::uint64_t seed) { return Rng(detail::mix64(seed)); }

/// Independent stream for e.g. one Monte-Carlo trajectory or one dataset
/// instance. Streams derived from the same base seed never share state, so
/// results do not depend on how work is split across threads.
inline Rng make_stream(std::uint64_t base_seed, std::uint64_t stream_index) {
  return Rng(detail::mix64(detail::mix64(base_seed) ^ stream_index));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace softrank
