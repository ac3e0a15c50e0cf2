#pragma once

// Deterministic random-number plumbing for the Monte-Carlo harness.
//
// Every sampling task (a ground-truth draw, one learning instance, ...) runs
// on its own std::mt19937_64 engine whose seed is derived statelessly from
// (master_seed, stream_a, stream_b). Substreams therefore do not depend on
// execution order, which is what makes the harness byte-deterministic under
// any degree of parallelism.

#include <cstdint>
#include <random>

namespace gpb::rng {

using Engine = std::mt19937_64;

// One SplitMix64 step: advances `state` and returns an avalanched output.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Stateless mix of (master, a, b) -> engine seed. Distinct (a, b) pairs give
// decorrelated seeds for the same master seed.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a,
                              std::uint64_t b) {
  std::uint64_t s = master;
  (void)splitmix64(s);
  s ^= (a + 1) * 0x9e3779b97f4a7c15ull;
  (void)splitmix64(s);
  s ^= (b + 1) * 0xc2b2ae3d27d4eb4full;
  return splitmix64(s);
}

// Stream tag reserved for ground-truth function draws (outside the rep-id
// range, so truth streams can never collide with per-instance streams).
inline constexpr std::uint64_t kTruthStream = 0x8000000000000000ull;

inline Engine make_engine(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b) {
  return Engine(mix_seed(master, a, b));
}

}  // namespace gpb::rng
