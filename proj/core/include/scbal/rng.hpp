#pragma once

#include <cstdint>
#include <random>

namespace scbal {

/// Identifies one replication's random stream. Streams for distinct
/// (master_seed, replication_index) pairs are derived independently, so
/// replications can run in any order on any worker.
struct RngSeed {
  std::uint64_t master_seed = 0;
  std::uint64_t replication_index = 0;
};

using Engine = std::mt19937_64;

/// Output of one SplitMix64 step taken from state x; a bijective 64-bit mix.
std::uint64_t avalanche(std::uint64_t x);

/// Stream key for one replication.
std::uint64_t derive_stream_seed(RngSeed seed);

Engine make_engine(RngSeed seed);

}  // namespace scbal
