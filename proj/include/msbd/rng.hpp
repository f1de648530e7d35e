#pragma once

#include <cstdint>
#include <random>

namespace msbd {

/// SplitMix64 finalizer; used to turn structured seeds into well-mixed ones.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent sub-seed for `index` within the family rooted at `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Named random streams so that, for one seed, the filter, the sparse inputs,
/// the noise and the initializations never share draws.
enum class Stream : std::uint64_t {
  Filter = 1,
  Inputs = 2,
  Noise = 3,
  Init = 4,
  Sampling = 5,
  Image = 6,
};

/// Seedable 64-bit generator (Mersenne Twister) with the handful of draws the
/// library needs. Deterministic for a fixed (seed, stream) within one build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, Stream stream = Stream::Sampling)
      : engine_(derive_seed(seed, static_cast<std::uint64_t>(stream))) {}

  double normal() { return normal_(engine_); }
  /// Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace msbd
