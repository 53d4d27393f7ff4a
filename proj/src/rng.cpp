#include "fiberair/rng.hpp"

#include <cmath>

namespace fiberair {

void Rng::normal_pair(double& a, double& b) {
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  a = r * std::cos(theta);
  b = r * std::sin(theta);
}

std::complex<double> Rng::complex_normal(double sigma2) {
  double a, b;
  normal_pair(a, b);
  const double s = std::sqrt(0.5 * sigma2);
  return {s * a, s * b};
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t x = 0x6a09e667f3bcc908ULL;
  for (std::uint64_t p : parts) {
    x ^= p + 0x9e3779b97f4a7c15ULL + (x << 6) + (x >> 2);
    x = Rng::splitmix64(x);
  }
  return x;
}

}  // namespace fiberair
