#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace steinmc {

// splitmix64 finalizer; bijective on 64-bit words with strong avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// FNV-1a over a tag string; used to separate experiment kinds into
// disjoint seed streams.
constexpr std::uint64_t stream_tag(std::string_view name) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : name) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Per-replica seed: mix of (master seed, stream tag, replica index).
// Replica streams are therefore independent of scheduling order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                    std::uint64_t index) {
  std::uint64_t h = mix64(master + kGolden);
  h = mix64(h ^ (tag + kGolden));
  h = mix64(h ^ (index + kGolden));
  return h;
}

// Seeded generator with pinned real-valued mappings. mt19937_64's integer
// sequence is fixed by the standard; the mappings below avoid the
// implementation-defined std::*_distribution classes so that identical
// seeds give identical streams on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // strictly inside (0,1)
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // uniform on {0, 1, ..., n-1}; rejection keeps the law exact
  int uniform_index(int n) {
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<int>(x % un);
  }

  // Marsaglia polar method, second variate cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double rademacher() { return uniform01() < 0.5 ? -1.0 : 1.0; }

  double exponential() { return -std::log(uniform01()); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace steinmc
