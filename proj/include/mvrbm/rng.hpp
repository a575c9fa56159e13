#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace mvrbm {

// Seedable generator with deterministic substreams. Substreams are derived
// from the root seed rather than from generator state, so the number of
// draws taken from one stream never shifts another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(scramble(seed)) {}

  // Child stream identified by `stream`; splitting is itself splittable.
  Rng split(std::uint64_t stream) const {
    return Rng(scramble(seed_ + 0x9e3779b97f4a7c15ull * (stream + 1)));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Box-Muller without caching: every call consumes exactly two uniforms.
  double normal(double mean = 0.0, double sd = 1.0) {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Index drawn proportionally to non-negative weights.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) return 0;
    double u = uniform01() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      cum += weights[i];
      if (u < cum) return i;
    }
    return weights.size() - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(uniform01() * static_cast<double>(i));
      if (j >= i) j = i - 1;
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  static std::uint64_t scramble(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace mvrbm
