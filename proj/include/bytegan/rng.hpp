#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace bytegan {

// splitmix64 finalizer
constexpr uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Counter-based generator: the value at (seed, stream, index) is a pure
// function of the triple, so independent consumers cannot perturb each other
// and any position can be re-addressed without replaying a sequence.
constexpr uint64_t rng_at(uint64_t seed, uint64_t stream, uint64_t index) {
  return mix64(mix64(mix64(seed) ^ stream) ^ index);
}

inline double unit_from_bits(uint64_t x) {
  // [0, 1), 53 mantissa bits
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

inline double unit_open_from_bits(uint64_t x) {
  // (0, 1]
  return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

// Standard normal at stream position i (Box-Muller, consumes counters 2i, 2i+1).
inline double normal_at(uint64_t seed, uint64_t stream, uint64_t index) {
  double u1 = unit_open_from_bits(rng_at(seed, stream, 2 * index));
  double u2 = unit_from_bits(rng_at(seed, stream, 2 * index + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  uint64_t next_u64() { return rng_at(seed_, stream_, counter_++); }
  double next_unit() { return unit_from_bits(next_u64()); }
  double next_normal() {
    double u1 = unit_open_from_bits(next_u64());
    double u2 = unit_from_bits(next_u64());
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Lemire reduction; bias is < n / 2^64, irrelevant at this scale and
  // deterministic, which is what matters here.
  uint64_t next_below(uint64_t n) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }

 private:
  uint64_t seed_;
  uint64_t stream_;
  uint64_t counter_ = 0;
};

}  // namespace bytegan
