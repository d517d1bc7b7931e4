#pragma once

// Portable randomness. Every random decision in the toolkit goes through
// these functions so that a seed reproduces the same splits, folds and RAND
// weights on any platform:
//   - sub-seeds:   splitmix64 over (seed ^ stage-tag)
//   - streams:     std::mt19937_64 (output sequence fixed by the standard)
//   - bounded int: rejection sampling on the raw 64-bit output
//   - shuffle:     Fisher-Yates from the back, j = bounded(i + 1)
//   - real (0,1):  ((x >> 11) + 0.5) * 2^-53
// std::shuffle and the std distributions are avoided on purpose: their
// algorithms are implementation-defined.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace simsmooth::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a, used to turn a stage name into a tag.
constexpr std::uint64_t tag(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive(std::uint64_t seed, std::string_view stage) noexcept {
  return splitmix64(seed ^ tag(stage));
}

// Strictly inside (0, 1). The top 53-bit value rounds up to 1.0 and is
// mapped to the largest double below 1.
inline double unit_open(std::uint64_t x) noexcept {
  const double u = (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
  return u < 1.0 ? u : 0x1.fffffffffffffp-1;
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, bound).
  std::uint64_t bounded(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  double uniform() { return unit_open(engine_()); }

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(bounded(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace simsmooth::rng
