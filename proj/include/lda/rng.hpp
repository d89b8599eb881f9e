#pragma once

#include <cstdint>

// Deterministic random number generation.
//
// Everything stochastic in the trainer draws from xoshiro256++ streams whose
// seeds are derived from (run seed, purpose tag, ids) with splitmix64. Both
// algorithms are published, stable reference constructions, so a run is
// replayable bit-for-bit by any implementation that follows the same
// derivation — unlike <random> engines/distributions, whose output is
// implementation-defined.

namespace lda {

// One splitmix64 step (Steele, Lea & Flood). Advances `state`, returns the
// next output.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a run seed plus up to three
// coordinates (purpose tag, worker/doc id, iteration). The chain absorbs each
// coordinate between splitmix64 steps; distinct coordinates give unrelated
// streams.
inline uint64_t derive_stream(uint64_t seed, uint64_t a, uint64_t b = 0,
                              uint64_t c = 0) {
  uint64_t s = seed;
  uint64_t h = splitmix64(s);
  s ^= a;
  h ^= splitmix64(s);
  s ^= b;
  h ^= splitmix64(s);
  s ^= c;
  h ^= splitmix64(s);
  return h;
}

// Purpose tags for derive_stream. Values are ASCII mnemonics; only
// distinctness matters.
namespace streams {
inline constexpr uint64_t kInit = 0x494e4954;    // "INIT" — initial assignments
inline constexpr uint64_t kSweep = 0x53575050;   // "SWPP" — Gibbs sweep t of worker w
inline constexpr uint64_t kSplit = 0x53504c54;   // "SPLT" — train/test split
inline constexpr uint64_t kFoldIn = 0x464f4c44;  // "FOLD" — fold-in of test doc d
inline constexpr uint64_t kSynth = 0x53594e54;   // "SYNT" — synthetic corpus
}  // namespace streams

// xoshiro256++ 1.0 (Blackman & Vigna, 2019). State is seeded by running
// splitmix64 from the given seed, per the authors' recommendation.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    for (auto& word : state_) word = splitmix64(seed);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53-bit resolution: (x >> 11) * 2^-53.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), n >= 1. Consumes exactly one next_double().
  uint32_t next_below(uint32_t n) {
    auto r = static_cast<uint32_t>(next_double() * static_cast<double>(n));
    return r < n ? r : n - 1;
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t state_[4];
};

}  // namespace lda
