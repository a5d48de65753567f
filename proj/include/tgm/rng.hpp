#pragma once

#include <cstdint>

namespace tgm {

// Splittable counter-style generator (splitmix64 core).  Every stream is a pure
// function of (seed, stream), so replication k can run on any thread, in any
// order, and still produce the same draws.
struct Rng {
  std::uint64_t state;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    state = mix(seed + 0x9e3779b97f4a7c15ULL);
    state = mix(state ^ mix(stream + 0xd1b54a32d192ed03ULL));
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    return mix(z);
  }

  // uniform on the open interval (0,1)
  double next_u01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }
};

}  // namespace tgm
