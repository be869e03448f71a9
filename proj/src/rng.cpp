#include "mesonet/rng.hpp"

namespace mesonet {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream RandomStream::derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ (a * 0xd1b54a32d192ed03ULL));
  key = splitmix64(key ^ (b * 0x8cb92ba72f3d8dd7ULL));
  return RandomStream(key);
}

double RandomStream::gamma(double shape) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(engine_);
}

double RandomStream::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  if (x + y <= 0.0) return a / (a + b);
  return x / (x + y);
}

int RandomStream::binomial(int trials, double p) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  std::binomial_distribution<int> dist(trials, p);
  return dist(engine_);
}

}  // namespace mesonet
