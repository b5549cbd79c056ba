#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace posesynth {

/// Mixes a value through the splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stable per-item seed: independent of scheduling and worker count.
constexpr std::uint64_t derive_seed(std::uint64_t global, std::string_view item_id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : item_id) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(global ^ mix64(h));
}

/// Thin wrapper over mt19937_64 with distribution helpers whose output is
/// identical on every standard library (no std::*_distribution).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace posesynth
