#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace topolab {

/// SplitMix64 finalizer. Used to derive well-separated engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// 64-bit random stream with platform-independent variate generation.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard; conversions to doubles and exponentials are done here rather
/// than with <random> distributions, whose algorithms are
/// implementation-defined. Independent per-trial streams come from
/// Rng::stream(master, index), so a trial's draws never depend on how
/// trials are scheduled.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  static Rng stream(std::uint64_t master_seed, std::uint64_t index) {
    return Rng(master_seed ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Exp(rate) variate.
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace topolab
