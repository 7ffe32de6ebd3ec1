#pragma once

#include <cstdint>

namespace mhe {

/// Counter-based generator: the n-th draw of a stream is a pure function of
/// (seed, stream, n), so parallel workers reproduce the same numbers
/// regardless of scheduling.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() { return mix(mix(seed_ ^ mix(stream_ + 0x632be59bd9b4e019ULL)) + counter_++); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  CounterRng split(std::uint64_t stream) const { return CounterRng(mix(seed_ + 0x1234567ULL), mix(stream_) ^ stream); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace mhe
