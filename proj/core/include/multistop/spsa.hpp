#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "multistop/common.hpp"
#include "multistop/model.hpp"
#include "multistop/policy.hpp"
#include "multistop/rng.hpp"

namespace multistop {

/// Gains a_n = epsilon_gain (n + 1 + varsigma)^-kappa and
/// c_n = mu_gain (n + 1)^-upsilon, plus the simulation budget.
struct SpsaConfig {
  double kappa = 0.602;
  double upsilon = 0.2;
  double varsigma = 0.5;
  double epsilon_gain = 0.1667;
  double mu_gain = 2.0;
  int max_iter = 1000;
  double grad_tol = 1e-3;
  /// Consecutive small-gradient iterations required before stopping.
  int grad_patience = 20;
  int mc_runs = 100;
  int horizon = 100;
  std::uint64_t seed = 1;
  bool common_random_numbers = true;
  int restarts = 10;
  /// Runs used to score each restart's final iterate.
  int selection_runs = 1000;
  /// Standard deviation of the random starting point.
  double init_scale = 1.0;

  void validate() const;
  double step_size(int n) const;
  double perturbation(int n) const;
};

SpsaConfig spsa_config_from_json(const std::string& text, SpsaConfig base = {});
std::string spsa_config_to_json(const SpsaConfig& cfg);

/// Sampled objective J(phi); the seed fixes every random draw inside.
using Objective = std::function<double(const Vector& phi, std::uint64_t eval_seed)>;

struct GradientSample {
  Vector gradient;
  Vector direction;
  double j_plus = 0.0;
  double j_minus = 0.0;
};

/// [J(phi + c w) - J(phi - c w)] / (2c) * w with Rademacher w drawn from rng.
/// Exactly two objective evaluations.
GradientSample gradient_estimate(const Vector& phi, double c, const Objective& objective,
                                 RngStream& rng, std::uint64_t seed_plus,
                                 std::uint64_t seed_minus);

struct SpsaTraceRow {
  int iter = 0;
  double j_plus = 0.0;
  double j_minus = 0.0;
  double grad_norm = 0.0;
};

struct SpsaResult {
  Vector phi;
  Vector best_phi;
  double best_estimate = 0.0;
  int iterations = 0;
  bool small_gradient = false;
  std::vector<SpsaTraceRow> trace;
};

/// phi_{n+1} = phi_n + a_n * gradient. best_phi tracks the iterate with the
/// largest (J+ + J-)/2.
SpsaResult train(const Objective& objective, const Vector& initial, const SpsaConfig& cfg);

std::string trace_csv(const std::vector<SpsaTraceRow>& trace);

/// Mean of run_linear over `runs` trajectories seeded from eval_seed.
Objective linear_objective(const Model& model, int horizon, int runs);
/// Same for the softmax parametrization (phi is the flattened theta).
Objective softmax_objective(const Model& model, int horizon, int runs);

struct TrainedPolicy {
  Vector phi;
  double selection_estimate = 0.0;
  std::uint64_t restart_seed = 0;
  std::vector<double> restart_estimates;
  SpsaResult result;  // of the selected restart
};

/// Multi-start SPSA; restart k uses derive_seed(cfg.seed, k) and, unless
/// `initial` is given, a N(0, init_scale^2) starting point.
TrainedPolicy train_multistart(const Objective& objective, int dim, const SpsaConfig& cfg,
                               const std::optional<Vector>& initial = std::nullopt);

struct TrainedThreshold {
  ThresholdParams params;
  TrainedPolicy training;
};
TrainedThreshold train_linear_threshold(const Model& model, const SpsaConfig& cfg);

struct TrainedSoftmax {
  SoftmaxParams params;
  TrainedPolicy training;
};
TrainedSoftmax train_softmax(const Model& model, const SpsaConfig& cfg);

}  // namespace multistop
