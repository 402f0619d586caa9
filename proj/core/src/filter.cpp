#include "multistop/filter.hpp"

#include <cmath>
#include <string>

namespace multistop {

FilterResult update(const Matrix& transition, const Matrix& observation, const Belief& pi, int y) {
  if (y < 0 || y >= observation.cols()) {
    throw ValidationError("observation index " + std::to_string(y) + " outside the alphabet");
  }
  Belief predicted = transition.transpose() * pi;
  Belief unnorm = observation.col(y).cwiseProduct(predicted);
  const double sigma = unnorm.sum();
  if (!(sigma > 0.0)) {
    throw ZeroLikelihoodError("observation " + std::to_string(y) + " has zero likelihood");
  }
  return {unnorm / sigma, sigma};
}

FilterResult update(const Model& model, const Belief& pi, int y) {
  if (pi.size() != model.states()) throw ValidationError("belief has the wrong number of entries");
  return update(model.transition(), model.observation_matrix(), checked_belief(pi), y);
}

Vector observation_likelihoods(const Model& model, const Belief& pi) {
  const Belief predicted = model.transition().transpose() * pi;
  return model.observation_matrix().transpose() * predicted;
}

Step sample_step(const Model& model, int state, RngStream& rng) {
  Step s;
  s.state = rng.categorical(model.transition().row(state).transpose());
  s.observation = rng.categorical(model.observation_matrix().row(s.state).transpose());
  return s;
}

int sample_initial_state(const Model& model, RngStream& rng) {
  return rng.categorical(model.initial_belief());
}

Belief checked_belief(const Belief& pi) {
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    if (!std::isfinite(pi[i]) || pi[i] < -kBeliefHardTolerance) {
      throw ValidationError("belief has a negative or non-finite entry");
    }
  }
  const double s = pi.sum();
  if (std::abs(s - 1.0) > kBeliefHardTolerance) throw ValidationError("belief does not sum to 1");
  Belief out = pi.cwiseMax(0.0);
  if (std::abs(s - 1.0) > 0.0) out /= out.sum();
  return out;
}

}  // namespace multistop
