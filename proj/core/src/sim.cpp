#include "multistop/sim.hpp"

#include <cmath>

#include <json.hpp>

#include "multistop/dp.hpp"
#include "multistop/filter.hpp"
#include "multistop/parallel.hpp"

namespace multistop {

int effective_horizon(const Model& model, int horizon) {
  if (horizon < 1) throw ValidationError("simulation horizon must be at least 1");
  if (model.discount() < 1.0) return horizon;
  const double cap = std::ceil(finite_stop_bound(model));
  return static_cast<int>(std::min<double>(horizon, cap));
}

Trajectory run_policy(const Model& model, const Policy& policy, int horizon, RngStream& rng, bool record) {
  const int steps = effective_horizon(model, horizon);
  RngStream dynamics = rng.split(0);
  RngStream decisions = rng.split(1);
  const double rho = model.discount();

  Trajectory tr;
  tr.seed = rng.seed();
  int x = sample_initial_state(model, dynamics);
  Belief pi = model.initial_belief();
  int left = model.stops();
  double weight = 1.0;
  if (record) tr.states.push_back(x);

  for (int n = 1; n <= steps && left > 0; ++n) {
    const Step step = sample_step(model, x, dynamics);
    x = step.state;
    pi = update(model.transition(), model.observation_matrix(), pi, step.observation).belief;
    weight *= rho;
    const Action a = policy.act(pi, left, n, decisions);
    if (a == Action::Stop) {
      tr.reward += weight * model.reward(left).dot(pi);
      --left;
      tr.stop_times.push_back(n);
    }
    if (record) {
      tr.states.push_back(x);
      tr.observations.push_back(step.observation);
      tr.beliefs.push_back(pi);
      tr.actions.push_back(a);
    }
  }
  return tr;
}

Trajectory run_linear(const Model& model, const ThresholdParams& params, int horizon, RngStream& rng) {
  return run_policy(model, LinearThresholdPolicy(params), horizon, rng);
}

Trajectory run_softmax(const Model& model, const SoftmaxParams& params, int horizon, RngStream& rng) {
  return run_policy(model, SoftmaxPolicy(params), horizon, rng);
}

namespace {

std::vector<double> run_all(const Model& model, const Policy& policy, int horizon, int runs, std::uint64_t seed) {
  if (runs < 1) throw ValidationError("evaluation needs at least one run");
  std::vector<double> rewards(static_cast<std::size_t>(runs));
  parallel_for(rewards.size(), [&](std::size_t k) {
    RngStream rng(derive_seed(seed, k));
    rewards[k] = run_policy(model, policy, horizon, rng, false).reward;
  });
  return rewards;
}

}  // namespace

EvalReport evaluate(const Model& model, const Policy& policy, int horizon, int runs, std::uint64_t seed) {
  EvalReport rep;
  rep.policy_id = policy.id();
  rep.runs = runs;
  rep.horizon = horizon;
  rep.seed = seed;
  rep.rewards = run_all(model, policy, horizon, runs, seed);
  for (int k = 0; k < runs; ++k) rep.run_seeds.push_back(derive_seed(seed, static_cast<std::uint64_t>(k)));
  rep.mean = pairwise_sum(rep.rewards.data(), rep.rewards.size()) / runs;
  if (runs > 1) {
    std::vector<double> sq(rep.rewards.size());
    for (std::size_t k = 0; k < sq.size(); ++k) sq[k] = (rep.rewards[k] - rep.mean) * (rep.rewards[k] - rep.mean);
    const double var = pairwise_sum(sq.data(), sq.size()) / (runs - 1);
    rep.std_error = std::sqrt(var / runs);
  }
  rep.ci_low = rep.mean - 1.96 * rep.std_error;
  rep.ci_high = rep.mean + 1.96 * rep.std_error;
  return rep;
}

double mean_reward(const Model& model, const Policy& policy, int horizon, int runs, std::uint64_t seed) {
  const auto rewards = run_all(model, policy, horizon, runs, seed);
  return pairwise_sum(rewards.data(), rewards.size()) / runs;
}

std::string eval_report_json(const EvalReport& report, const std::string& scenario_hash, bool include_runs) {
  nlohmann::json doc;
  doc["scenario_hash"] = scenario_hash;
  doc["seed"] = report.seed;
  doc["policy_id"] = report.policy_id;
  doc["runs"] = report.runs;
  doc["horizon"] = report.horizon;
  doc["mean"] = report.mean;
  doc["std_error"] = report.std_error;
  doc["ci95"] = {report.ci_low, report.ci_high};
  doc["run_seeds"] = report.run_seeds;
  if (include_runs) doc["rewards"] = report.rewards;
  return doc.dump(2);
}

double relative_improvement(double a, double b) { return 100.0 * (a - b) / std::abs(b); }

}  // namespace multistop
