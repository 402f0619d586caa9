#pragma once

#include <cstdint>
#include <random>

#include "multistop/common.hpp"

namespace multistop {

/// SplitMix64 mix of (seed, stream); used to derive independent child seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// A seeded random stream. Children derived with split() are independent of
/// the parent's consumption, so results do not depend on scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  RngStream split(std::uint64_t stream) const { return RngStream(derive_seed(seed_, stream)); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Index drawn from a (not necessarily normalized) nonnegative weight vector.
  int categorical(const Eigen::Ref<const Vector>& weights);
  /// +1 or -1 with probability one half each.
  int rademacher();
  double normal();
  /// Unbounded Poisson count.
  long poisson(double rate);
  /// Uniform draw on the simplex of the given dimension (Dirichlet(1,...,1)).
  Vector dirichlet_ones(int dim);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace multistop
