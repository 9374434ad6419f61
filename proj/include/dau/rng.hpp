#pragma once

#include <cstdint>
#include <random>

namespace dau {

using Rng = std::mt19937_64;

/// Named random streams derived from one master seed.
enum class Stream : std::uint64_t {
  init = 1,
  env = 2,
  exploration = 3,
  buffer = 4,
  eval = 5,
  theory = 6,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for (master seed, stream, index). Depends only on
/// its arguments, never on the order in which streams are created.
inline Rng make_stream(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  h = splitmix64(h ^ index);
  return Rng(h);
}

}  // namespace dau
