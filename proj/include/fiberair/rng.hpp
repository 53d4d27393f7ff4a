#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>

namespace fiberair {

/// Deterministic, implementation-pinned random number generator
/// (xoshiro256++ seeded through splitmix64). The standard library
/// distributions are avoided on purpose: results must be identical
/// across compilers and standard libraries for reproducible sweeps.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in (0, 1]; never returns 0 so log() is safe.
  double uniform() {
    const std::uint64_t bits = next_u64() >> 11;  // 53 bits
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n) by rejection; unbiased for any n.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  /// One standard-normal pair via Box-Muller.
  void normal_pair(double& a, double& b);

  /// Circularly symmetric complex Gaussian with total variance sigma2
  /// (variance sigma2/2 per real component).
  std::complex<double> complex_normal(double sigma2);

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }
  std::uint64_t state_[4];
};

/// Pure function of its arguments; used to give every (grid point, run,
/// role) its own independent stream.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

/// Stream roles for seed derivation. Training and evaluation use
/// different roles so their channel noise is disjoint by construction.
enum class SeedRole : std::uint64_t {
  TrainingChannel = 0x11,
  EvalChannel = 0x22,
  Sdbp = 0x33,
};

}  // namespace fiberair
