#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fiddle::num {

/// Counter-style 64-bit generator (splitmix64). Identical seeds give
/// bit-identical streams on every platform; derive() splits one base seed
/// into independent streams for parallel replications and per-network
/// trainers.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}

  /// Splitting rule: mix(base, index). Distinct indices give distinct seeds
  /// with overwhelming probability.
  static std::uint64_t derive(std::uint64_t base, std::uint64_t index);

  std::uint64_t next_u64();

  /// Uniform on [0, 1), 53-bit resolution.
  double next_unit();

  /// Uniform on [a, b); requires a < b.
  double uniform(double a, double b);

  /// Gaussian via Box-Muller; sd = 0 returns mean exactly. Always consumes
  /// two uniforms so the stream does not depend on the parameters.
  double normal(double mean, double sd);

  bool bernoulli(double prob);

  /// Fisher-Yates shuffle.
  void shuffle(std::span<std::size_t> idx);

 private:
  std::uint64_t state_;
};

}  // namespace fiddle::num
