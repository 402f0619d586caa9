#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "multistop/common.hpp"
#include "multistop/model.hpp"
#include "multistop/policy.hpp"
#include "multistop/rng.hpp"

namespace multistop {

/// One simulated run. states[0] is x_0; observations, beliefs and actions
/// are indexed by decision epoch n = 1..(length) at position n - 1.
struct Trajectory {
  std::uint64_t seed = 0;
  std::vector<int> states;
  std::vector<int> observations;
  std::vector<Belief> beliefs;
  std::vector<Action> actions;
  std::vector<int> stop_times;  // chronological; the k-th stop had L - k stops left before it
  double reward = 0.0;
};

/// Finite-horizon run of any policy: x_0 ~ pi0; for n = 1..N observe, update
/// the belief, act; a stop with l stops left adds rho^n pi_n' r_l. Ends when
/// the budget is spent or at n = N. When discount == 1 the horizon is capped
/// at the finite-stopping bound. The dynamics and the policy draw from
/// independent child streams of `rng`.
Trajectory run_policy(const Model& model, const Policy& policy, int horizon, RngStream& rng,
                      bool record = true);

Trajectory run_linear(const Model& model, const ThresholdParams& params, int horizon,
                      RngStream& rng);
Trajectory run_softmax(const Model& model, const SoftmaxParams& params, int horizon,
                       RngStream& rng);

/// Horizon actually simulated for a requested N.
int effective_horizon(const Model& model, int horizon);

struct EvalReport {
  std::string policy_id;
  int runs = 0;
  int horizon = 0;
  std::uint64_t seed = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<std::uint64_t> run_seeds;
  std::vector<double> rewards;
};

/// Independent runs with seeds derive_seed(seed, k); aggregation uses
/// pairwise summation so the report does not depend on the thread count.
EvalReport evaluate(const Model& model, const Policy& policy, int horizon, int runs,
                    std::uint64_t seed);

/// Mean discounted reward only (no per-run bookkeeping).
double mean_reward(const Model& model, const Policy& policy, int horizon, int runs,
                   std::uint64_t seed);

std::string eval_report_json(const EvalReport& report, const std::string& scenario_hash,
                             bool include_runs = false);

/// 100 * (a - b) / |b|.
double relative_improvement(double a, double b);

}  // namespace multistop
