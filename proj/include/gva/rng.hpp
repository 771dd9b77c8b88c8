#ifndef GVA_RNG_HPP
#define GVA_RNG_HPP

#include <cstdint>
#include <random>

#include "gva/common.hpp"

namespace gva {

// Finalizer step of splitmix64; used to derive well-separated stream seeds
// from a base seed plus an index.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// A seeded stream of standard-normal draws. Each optimizer run and each
// diagnostics pass owns exactly one stream.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double next() { return normal_(engine_); }

  Vector next_vector(Index d) {
    Vector z(d);
    for (Index i = 0; i < d; ++i) z[i] = normal_(engine_);
    return z;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace gva

#endif  // GVA_RNG_HPP
