#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace cuisine {

/// Deterministic 64-bit generator: xoshiro256++ seeded through splitmix64.
/// The stream depends only on the seed, never on the platform. Every
/// randomized component of the toolkit draws from this class so that equal
/// seeds reproduce equal runs bit for bit.
///
/// Stream derivation for sub-tasks (per class, per tree, per epoch) goes
/// through derive(), which mixes the stream id into the parent seed with
/// splitmix64. Derived streams are independent of how many draws were taken
/// from the parent.
class Prng {
 public:
  explicit Prng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
  }

  std::uint64_t seed() const { return seed_; }

  /// xoshiro256++ step.
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

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t bound = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= bound);
    return x % n;
  }

  /// Standard normal via Box-Muller. Consumes two uniforms per call; the
  /// second branch is discarded so the state advance per call is fixed.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Fisher-Yates, descending index order.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Independent child stream for sub-task `stream_id`.
  Prng derive(std::uint64_t stream_id) const {
    std::uint64_t x = stream_id + 0x9e3779b97f4a7c15ULL;
    return Prng(seed_ ^ splitmix64(x));
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  std::uint64_t seed_;
};

}  // namespace cuisine
