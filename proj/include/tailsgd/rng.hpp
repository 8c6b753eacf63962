#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tailsgd {

// 64-bit FNV-1a over a byte string.
constexpr std::uint64_t fnv1a64(std::string_view s,
                                std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// splitmix64 finalizer; good avalanche, cheap, stable across platforms.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from (master_seed, purpose, index).
// Purpose tags keep unrelated consumers (datasets, SGD indices, replicates)
// on disjoint streams even when indices collide, so replicates can run in any
// order or in parallel without changing results.
std::uint64_t derive_stream(std::uint64_t master_seed, std::string_view purpose,
                            std::uint64_t index);

// Seedable generator with a fixed, documented draw discipline.
//
// Normal deviates come from a hand-rolled Box-Muller (second value cached)
// rather than std::normal_distribution, whose output is implementation-defined
// and would break bit-identical regeneration. uniform_index uses modulo
// reduction: the bias is < n / 2^64 (immaterial here) and the draw count per
// call is always exactly one engine step, which keeps streams reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t stream_seed) : eng_(stream_seed) {}

  std::uint64_t u64() { return eng_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on {0, ..., n-1}; n must be > 0.
  std::size_t uniform_index(std::size_t n);

  // Standard normal deviate.
  double normal();

  // +1.0 or -1.0 with equal probability (one engine step).
  double rademacher() { return (eng_() & 1ull) ? 1.0 : -1.0; }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace tailsgd
