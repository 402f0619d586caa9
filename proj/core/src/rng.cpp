#include "multistop/rng.hpp"

#include <cmath>

namespace multistop {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int RngStream::categorical(const Eigen::Ref<const Vector>& weights) {
  const double total = weights.sum();
  const double u = uniform() * total;
  double acc = 0.0;
  int last = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;
}

int RngStream::rademacher() { return (engine_() >> 63) ? 1 : -1; }

double RngStream::normal() {
  // Box-Muller on our own uniforms keeps draws identical across standard libraries.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

long RngStream::poisson(double rate) {
  if (rate <= 0.0) return 0;
  if (rate < 30.0) {
    const double limit = std::exp(-rate);
    long k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }
  // Inversion by sequential search from the mode region.
  const double u = uniform();
  double p = std::exp(-rate);
  double cdf = p;
  long k = 0;
  while (cdf < u && k < 100000) {
    ++k;
    p *= rate / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

Vector RngStream::dirichlet_ones(int dim) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    v[i] = -std::log(u);
  }
  return v / v.sum();
}

}  // namespace multistop
