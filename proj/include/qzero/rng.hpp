#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace qzero {

// Splittable seeding: mixes a base seed with up to three stream indices so
// that every phase of a run (generator, episode, arena round, shuffle, ...)
// draws from its own deterministic stream.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a = 0,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t s = splitmix(base);
  s = splitmix(s ^ (a + 0x1000000000000001ULL));
  s = splitmix(s ^ (b + 0x2000000000000003ULL));
  s = splitmix(s ^ (c + 0x3000000000000005ULL));
  return s;
}

// Seeded generator with fully specified sampling helpers. std::mt19937_64 is
// pinned by the standard and the helpers below avoid std::*_distribution,
// whose output differs between standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform integer in [0, n). Rejection sampling, bias-free.
  int below(int n) {
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return static_cast<int>(x % un);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double real01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform double in [-a, a].
  double symmetric(double a) { return (2.0 * real01() - 1.0) * a; }

  bool chance(double p) { return real01() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      std::swap(v[static_cast<std::size_t>(i)],
                v[static_cast<std::size_t>(below(i + 1))]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace qzero
