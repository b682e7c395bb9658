#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace motionhmm {

// All randomness in this library flows through this generator so that every
// artifact is reproducible bit-for-bit across platforms and standard library
// implementations (std::shuffle and the std:: distributions make no such
// guarantee). The core generator is xorshift64* with the classic shift
// triple (12, 25, 27) and multiplier 0x2545F4914F6CDD1D.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {
    if (state_ == 0) state_ = 0x9E3779B97F4A7C15ull;
  }

  std::uint64_t next_u64() {
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1Dull;
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Unbiased integer in [0, n) by rejection from a power-of-two mask.
  std::uint64_t next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    std::uint64_t v;
    do {
      v = next_u64() & mask;
    } while (v >= n);
    return v;
  }

  // Standard normal via Box-Muller. Consumes exactly two uniform draws per
  // call (no caching) so the draw sequence is easy to reason about.
  double next_normal() {
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Fisher-Yates: walk from the back, swap slot i with a uniform pick from
  // [0, i].
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

 private:
  std::uint64_t state_;
};

// Derives the seed for a named task from the run's root seed. Tasks are
// identified by a label plus an index (e.g. one model out of many trained in
// parallel); identical (root, label, index) triples always produce the same
// stream, and distinct tasks get decorrelated streams. FNV-1a over the label
// bytes, then splitmix64 mixing of root and index.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view task,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a 64-bit offset basis
  for (unsigned char c : task) {
    h ^= c;
    h *= 0x100000001B3ull;  // FNV-1a 64-bit prime
  }
  h = Rng::splitmix64(h ^ Rng::splitmix64(root));
  return Rng::splitmix64(h ^ Rng::splitmix64(index * 0x9E3779B97F4A7C15ull + 1));
}

}  // namespace motionhmm
