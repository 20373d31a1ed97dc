#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace modalreg {

using Rng = std::mt19937_64;

//! splitmix64 finalizer.
constexpr std::uint64_t
mix64(std::uint64_t z)
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

//! Independent generator for a (seed, stream...) path. Streams derived this
//! way do not depend on the order in which they are created, which keeps
//! parallel replicates reproducible.
inline Rng
make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {})
{
  std::uint64_t state = mix64(seed);
  for (std::uint64_t p : path)
    state = mix64(state ^ mix64(p + 0x632be59bd9b4e019ULL));
  return Rng(state);
}

} // namespace modalreg
