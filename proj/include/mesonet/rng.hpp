#pragma once

#include <cstdint>
#include <random>

namespace mesonet {

/// Seeded pseudo-random stream. Each replication owns one; never share across threads.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  /// Independent child stream keyed by (seed, a, b). Identical keys give
  /// identical streams regardless of the order in which children are made.
  static RandomStream derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double gamma(double shape);
  double beta(double a, double b);
  int binomial(int trials, double p);
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace mesonet
