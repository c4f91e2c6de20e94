#include "rng.hpp"

#include <cmath>
#include <numbers>

#include "error.hpp"

namespace fiddle::num {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t SeededRng::derive(std::uint64_t base, std::uint64_t index) {
  return mix64(mix64(base + kGamma) + (index + 1) * kGamma);
}

std::uint64_t SeededRng::next_u64() {
  state_ += kGamma;
  return mix64(state_);
}

double SeededRng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double a, double b) {
  require(a < b, ErrorCode::InvalidArgument, "uniform: requires a < b");
  return a + (b - a) * next_unit();
}

double SeededRng::normal(double mean, double sd) {
  require(sd >= 0.0, ErrorCode::InvalidArgument, "normal: requires sd >= 0");
  const double u1 = 1.0 - next_unit();  // (0, 1], keeps log finite
  const double u2 = next_unit();
  const double z =
      std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mean + sd * z;
}

bool SeededRng::bernoulli(double prob) {
  return next_unit() < prob;
}

void SeededRng::shuffle(std::span<std::size_t> idx) {
  if (idx.size() < 2) return;
  for (std::size_t i = idx.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(next_u64() % (i + 1));
    std::swap(idx[i], idx[j]);
  }
}

}  // namespace fiddle::num
