#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace screensum {

// Seeded generator whose derived draws are identical on every platform.
// std::mt19937_64's raw stream is fixed by the standard; the standard
// distributions are not, so the conversions below are done by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, bound) by rejection sampling.
  std::uint64_t below(std::uint64_t bound);

  // Standard normal via Box-Muller (one draw per call, no caching).
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  // k distinct values from [0, n), returned in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace screensum
