#include "scbal/rng.hpp"

#include <array>

namespace scbal {

std::uint64_t avalanche(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_stream_seed(RngSeed seed) {
  // Mixing the master first keeps (m, r) and (m', r') from colliding through
  // simple offsets such as m + r == m' + r'.
  return avalanche(avalanche(seed.master_seed) ^ avalanche(~seed.replication_index));
}

Engine make_engine(RngSeed seed) {
  const std::uint64_t key = derive_stream_seed(seed);
  // Expand the key into a full seed sequence so the Mersenne state is not
  // mostly zero after initialization.
  std::array<std::uint32_t, 8> words{};
  std::uint64_t s = key;
  for (std::size_t i = 0; i < words.size(); i += 2) {
    s = avalanche(s);
    words[i] = static_cast<std::uint32_t>(s);
    words[i + 1] = static_cast<std::uint32_t>(s >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return Engine(seq);
}

}  // namespace scbal
