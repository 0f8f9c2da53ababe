#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Core>

namespace barl {

// splitmix64 finalizer; used both as a hash mixer and for seeding.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Deterministic stream derivation: hash_stream(seed, {tags...}) gives the seed
// of an independent substream. Parallel work items must each derive their own
// stream from indices so that thread count never changes the numbers drawn.
inline std::uint64_t hash_stream(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(seed ^ 0xA24BAED4963EE407ULL);
  for (std::uint64_t t : tags) h = splitmix64(h ^ t);
  return h;
}

// Seeded random stream with hand-rolled distributions. std::mt19937_64 is
// fully specified by the standard; the distributions below avoid the
// implementation-defined std::*_distribution so results are reproducible
// across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    return Rng(hash_stream(seed, tags));
  }

  std::uint64_t next_u64() { return engine_(); }

  // uniform on [0, 1)
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // uniform integer in [0, n)
  std::uint64_t uniform_index(std::uint64_t n) {
    // multiply-shift; bias is negligible for n << 2^64
    return static_cast<std::uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  // standard normal via Box-Muller; consumes two uniforms per draw
  double normal() {
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  Eigen::VectorXd normal_vec(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Eigen::VectorXd uniform_vec(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    Eigen::VectorXd v(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) v[i] = uniform(lo[i], hi[i]);
    return v;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace barl
