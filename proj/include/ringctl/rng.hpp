#ifndef RINGCTL_RNG_HPP
#define RINGCTL_RNG_HPP

#include <cstdint>

namespace ringctl {

// Deterministic, platform-independent RNG. std::uniform_real_distribution is
// implementation-defined, so uniforms are derived directly from the raw bits.
// Streams are keyed by (global seed, trajectory seed, purpose tag) so the same
// key always yields the same draws, regardless of thread count or call order.
class Rng {
 public:
  explicit Rng(std::uint64_t state) : state_(state) {}

  static Rng stream(std::uint64_t global_seed, std::uint64_t traj_seed,
                    std::uint64_t purpose) {
    std::uint64_t s = mix(global_seed + 0x9E3779B97F4A7C15ULL);
    s = mix(s ^ mix(traj_seed + 0xBF58476D1CE4E5B9ULL));
    s = mix(s ^ mix(purpose + 0x94D049BB133111EBULL));
    return Rng(s);
  }

  // splitmix64 step
  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1) with 53-bit resolution
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double next_uniform(double lo, double hi) { return lo + next_unit() * (hi - lo); }

  bool next_bernoulli(double p) { return next_unit() < p; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace ringctl

#endif  // RINGCTL_RNG_HPP
