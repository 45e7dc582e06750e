#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace stsep {

// Deterministic random stream. Replicate streams are derived from
// (seed, replicate index) so results do not depend on scheduling order
// or thread count.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed ^ 0x9e3779b97f4a7c15ull) {}

  static Rng for_replicate(std::uint64_t seed, std::uint64_t replicate) {
    std::seed_seq seq{seed, 0x52a7f9d1u + replicate, replicate};
    std::mt19937_64 eng(seq);
    Rng r(0);
    r.eng_ = eng;
    return r;
  }

  // Uniform on [0, 1).
  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(eng_);
  }

  double uniform(double a, double b) {
    return a + (b - a) * uniform();
  }

  // Uniform integer on [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(eng_);
  }

  double normal() { return normal_(eng_); }

  long poisson(double mean) {
    return std::poisson_distribution<long>(mean)(eng_);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    std::shuffle(v.begin(), v.end(), eng_);
  }

  std::mt19937_64& engine() { return eng_; }

private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace stsep
