#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <string_view>

namespace dqsgd {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// One reproducible random stream.  Sampling is implemented on top of the raw
// 64-bit generator output instead of <random> distributions, so that a given
// seed produces the same sequence on every platform and standard library.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // True with probability p; consumes exactly one draw for any p.
  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    // 1 - u in (0, 1] keeps the logarithm finite.
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
  }

  // Uniform integer in [0, n); n must be positive.
  int uniform_int(int n) {
    const unsigned __int128 wide =
        static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
    return static_cast<int>(wide >> 64);
  }

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// Derives a substream from a master seed, a domain label, and an index.
// Streams with different (domain, index) pairs are statistically disjoint,
// which is what keeps e.g. per-agent gradient noise independent of per-agent
// quantization draws under a single run seed.
inline RngStream derive_stream(std::uint64_t master, std::string_view domain,
                               std::uint64_t index) {
  std::uint64_t state = master;
  state ^= fnv1a64(domain);
  state ^= 0x9e3779b97f4a7c15ULL * (index + 1);
  const std::uint64_t a = splitmix64(state);
  const std::uint64_t b = splitmix64(state);
  return RngStream(a ^ (b << 1));
}

}  // namespace dqsgd
