#pragma once

#include <cstdint>
#include <random>

namespace spi {

// splitmix64 finalizer (Vigna). Used to derive independent per-stream seeds from
// (master_seed, stream index) without any sequential state, so trials can be
// scheduled on any number of workers and still see identical randomness.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream) {
  return mix64(master_seed ^ mix64(stream + 0x9e3779b97f4a7c15ULL));
}

inline std::mt19937_64 make_engine(std::uint64_t master_seed, std::uint64_t stream) {
  return std::mt19937_64(derive_seed(master_seed, stream));
}

// Uniform draw in the open interval (0,1). std::uniform_real_distribution is
// implementation-defined, so we map raw engine output ourselves to keep the
// stream fully specified by the standardized mt19937_64 sequence.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

// Uniform draw in [lo, hi].
inline double uniform_in(std::mt19937_64& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(eng);
}

// Uniform integer in [lo, hi] via rejection-free modulo; bias is negligible for
// the small ranges used here and keeps the draw count per trial fixed.
inline long uniform_int_in(std::mt19937_64& eng, long lo, long hi) {
  return lo + static_cast<long>(eng() % static_cast<std::uint64_t>(hi - lo + 1));
}

}  // namespace spi
