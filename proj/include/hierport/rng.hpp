#pragma once

#include <cstdint>
#include <random>

namespace hierport::rng {

// mt19937_64 output is fixed by the standard, but the std distributions are
// not, so every draw below is converted by hand to stay bit-identical across
// standard libraries.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of the index-th independent substream of a master seed.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t state = master;
  const std::uint64_t a = splitmix64(state);
  state = a ^ (index * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL);
  return splitmix64(state);
}

inline std::mt19937_64 substream(std::uint64_t master, std::uint64_t index) {
  return std::mt19937_64{substream_seed(master, index)};
}

/// Uniform double in the open interval (0, 1).
inline double open_unit(std::mt19937_64& gen) {
  return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

}  // namespace hierport::rng
