#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace imti {

// Deterministic random source. Every draw is an explicit transform of raw
// mt19937_64 output; std::*_distribution is implementation-defined and would
// break cross-toolchain reproducibility, so none of it is used here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller. Two fresh uniforms per sample; no spare
  // is cached, so the stream position is a pure function of the call count.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kTau * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n); rejection sampling keeps it exactly uniform.
  std::uint64_t below(std::uint64_t n);

  // Fisher-Yates, descending index.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Child stream decoupled from subsequent draws on this one.
  Rng fork() { return Rng(bits() ^ 0x9e3779b97f4a7c15ull); }

 private:
  static constexpr double kTau = 6.283185307179586476925286766559;
  std::mt19937_64 gen_;
};

}  // namespace imti
