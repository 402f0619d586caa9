#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "multistop/common.hpp"

namespace multistop {

/// Observation law given as an explicit S x Y row-stochastic matrix.
struct ExplicitObservation {
  Matrix matrix;
};

/// Poisson counts with state-dependent rate. Counts >= max_count are lumped
/// into the last symbol so the alphabet is {0, ..., max_count}.
struct PoissonObservation {
  Vector rates;
  int max_count = 0;
};

using ObservationLaw = std::variant<ExplicitObservation, PoissonObservation>;

/// Default truncation tolerance for Poisson alphabets.
inline constexpr double kPoissonTailTolerance = 1e-6;

/// Smallest y such that every rate's cdf at y is >= 1 - tail_tolerance.
int poisson_truncation_bound(const Vector& rates, double tail_tolerance = kPoissonTailTolerance);

/// S x (max_count + 1) matrix of Poisson probabilities with the upper tail
/// lumped into the last column.
Matrix discretize_observations(const PoissonObservation& law);

/// Multiple-stopping POMDP. Rewards are stop rewards indexed by the number of
/// stops remaining: rewards[l - 1] is r_l. The continue reward is zero.
class Model {
 public:
  Model(Matrix transition, ObservationLaw observation, std::vector<Vector> rewards,
        double discount, int stops, Vector initial_belief,
        std::optional<double> continue_penalty = std::nullopt);

  int states() const noexcept { return static_cast<int>(transition_.rows()); }
  int observations() const noexcept { return static_cast<int>(obs_matrix_.cols()); }
  int stops() const noexcept { return stops_; }
  double discount() const noexcept { return discount_; }

  const Matrix& transition() const noexcept { return transition_; }
  const ObservationLaw& observation_law() const noexcept { return observation_; }
  /// Row-stochastic S x Y matrix B(i, y) used by the filter and the solver.
  const Matrix& observation_matrix() const noexcept { return obs_matrix_; }
  /// Stop reward with l stops remaining, 1 <= l <= stops().
  const Vector& reward(int l) const { return rewards_.at(static_cast<std::size_t>(l - 1)); }
  const std::vector<Vector>& rewards() const noexcept { return rewards_; }
  bool shared_reward() const;
  const Vector& initial_belief() const noexcept { return initial_belief_; }
  /// Strictly negative continue-reward floor; only meaningful when discount == 1.
  const std::optional<double>& continue_penalty() const noexcept { return continue_penalty_; }

  /// max over l, i of r_l(i).
  double max_reward() const;
  /// max over l, i of |r_l(i)|.
  double max_abs_reward() const;

  Model with_discount(double rho) const;
  Model with_transition(Matrix transition) const;
  Model with_rewards(std::vector<Vector> rewards) const;
  Model with_initial_belief(Vector pi0) const;

 private:
  Matrix transition_;
  ObservationLaw observation_;
  Matrix obs_matrix_;
  std::vector<Vector> rewards_;
  double discount_;
  int stops_;
  Vector initial_belief_;
  std::optional<double> continue_penalty_;
};

/// Loads a model document (.json or .toml, chosen by extension; content
/// sniffing otherwise).
Model load_model(const std::filesystem::path& path);
Model parse_model_json(const std::string& text);
Model parse_model_toml(const std::string& text);

/// Serializes with shortest round-trip decimal representation.
std::string model_to_json(const Model& model, int indent = 2);
void save_model(const Model& model, const std::filesystem::path& path);

/// Stable 64-bit FNV-1a hash, rendered as 16 hex digits.
std::string content_hash(const std::string& text);

}  // namespace multistop
