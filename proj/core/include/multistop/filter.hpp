#pragma once

#include <utility>

#include "multistop/common.hpp"
#include "multistop/model.hpp"
#include "multistop/rng.hpp"

namespace multistop {

struct FilterResult {
  Belief belief;
  double likelihood = 0.0;
};

/// Tolerance on |sum - 1| below which a belief is silently renormalized.
inline constexpr double kRenormalizeTolerance = 1e-10;
/// Beyond this drift the input is rejected as not a belief.
inline constexpr double kBeliefHardTolerance = 1e-6;

/// Bayesian filter step: T(pi, y) = B_y P' pi / sigma(pi, y),
/// sigma(pi, y) = 1' B_y P' pi. Throws ZeroLikelihoodError when sigma == 0.
FilterResult update(const Model& model, const Belief& pi, int y);

/// Same recursion on raw matrices (used for model-free checks).
FilterResult update(const Matrix& transition, const Matrix& observation, const Belief& pi, int y);

/// Vector of sigma(pi, y) over the whole alphabet.
Vector observation_likelihoods(const Model& model, const Belief& pi);

struct Step {
  int state = 0;
  int observation = 0;
};

/// x' ~ P(x, .), y ~ B(x', .). States and observations are 0-based.
Step sample_step(const Model& model, int state, RngStream& rng);

/// x_0 ~ pi0.
int sample_initial_state(const Model& model, RngStream& rng);

/// Checks nonnegativity and the sum tolerance; renormalizes small drift.
Belief checked_belief(const Belief& pi);

}  // namespace multistop
