#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace squat {

// Deterministic seedable generator. The engine is std::mt19937_64 (fully
// specified by the standard) and every distribution is hand-rolled on top of
// it, so identical seeds give bit-identical streams on every platform.
//
// split() derives an independent child stream from the construction seed and
// a label; it does not consume state, so the child is the same no matter how
// many values were drawn from the parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  Rng split(std::string_view label) const;
  Rng split(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  double uniform01();  // [0, 1), 53-bit resolution
  double uniform(double lo, double hi);
  double normal(double mean = 0.0, double stddev = 1.0);
  // Inclusive bounds, unbiased via rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p);

  // Draws an index with probability proportional to weights[i].
  std::size_t weighted_index(const std::vector<double>& weights);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace squat
