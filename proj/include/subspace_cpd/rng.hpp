#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace subspace_cpd {

// Counter-based 64-bit generator (SplitMix64, Steele/Lea/Flood 2014).
// output(i) = mix(seed + (i+1) * 0x9E3779B97F4A7C15), so a stream is a pure
// function of (seed, counter) and replays identically everywhere.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform on (0, 1]: 53 mantissa bits, zero excluded so log() is safe
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

// Independent per-trial streams: seed_i = mix(mix(master) ^ (i+1)).
// Order-independent, so parallel trial scheduling cannot change results.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  SplitMix64 m(master);
  std::uint64_t h = m.next_u64();
  SplitMix64 s(h ^ (index + 1) * 0xD1B54A32D192ED03ULL);
  return s.next_u64();
}

// Gaussian draws via Box-Muller on SplitMix64 uniforms. Each pair of normals
// consumes exactly two uniforms; the second of the pair is cached.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : gen_(seed) {}

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = gen_.next_unit();
    const double u2 = gen_.next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double uniform() { return gen_.next_unit(); }
  std::uint64_t next_u64() { return gen_.next_u64(); }

 private:
  SplitMix64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace subspace_cpd
