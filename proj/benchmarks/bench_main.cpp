#include <benchmark/benchmark.h>

#include <string>

#include "multistop/dp.hpp"
#include "multistop/filter.hpp"
#include "multistop/grid.hpp"
#include "multistop/ingest.hpp"
#include "multistop/model.hpp"
#include "multistop/policy.hpp"
#include "multistop/rng.hpp"
#include "multistop/sim.hpp"

namespace {

using namespace multistop;

const Model& example() {
  static const Model m = load_model(std::string(MULTISTOP_SCENARIO_DIR) + "/eq16.json");
  return m;
}

void BM_FilterUpdate(benchmark::State& state) {
  const Model& m = example();
  Belief pi = m.initial_belief();
  int y = 0;
  for (auto _ : state) {
    FilterResult r = update(m.transition(), m.observation_matrix(), pi, y);
    pi = r.belief;
    y = (y + 1) % static_cast<int>(m.observation_matrix().cols());
    benchmark::DoNotOptimize(pi.data());
  }
}
BENCHMARK(BM_FilterUpdate);

void BM_Solve(benchmark::State& state) {
  const Model& m = example();
  const BeliefGrid grid(m.states(), static_cast<int>(state.range(0)));
  for (auto _ : state) {
    ValueTable t = solve(m, grid, {});
    benchmark::DoNotOptimize(t.residual());
  }
  state.counters["points"] = static_cast<double>(grid.size());
}
BENCHMARK(BM_Solve)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_EvaluatePeriodic(benchmark::State& state) {
  const Model& m = example();
  const PeriodicPolicy policy(default_period(100, m.stops()));
  const auto runs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mean_reward(m, policy, 100, runs, 7));
  }
  state.SetItemsProcessed(state.iterations() * runs);
}
BENCHMARK(BM_EvaluatePeriodic)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_EvaluateGrid(benchmark::State& state) {
  const Model& m = example();
  const BeliefGrid grid(m.states(), BeliefGrid::resolution_for(m.states(), 100));
  const GridPolicy policy(m, solve(m, grid, {}));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mean_reward(m, policy, 100, 200, 7));
  }
}
BENCHMARK(BM_EvaluateGrid)->Unit(benchmark::kMillisecond);

void BM_EmFit(benchmark::State& state) {
  const Matrix p{{0.9, 0.05, 0.05}, {0.05, 0.9, 0.05}, {0.05, 0.05, 0.9}};
  const Vector rates{{20.0, 8.0, 1.0}};
  const Vector init = Vector::Constant(3, 1.0 / 3.0);
  RngStream rng(11);
  const std::vector<std::vector<long>> seqs{
      simulate_counts(p, rates, init, static_cast<std::size_t>(state.range(0)), rng)};
  EmOptions options;
  options.restarts = 1;
  options.max_iter = 50;
  options.rel_tol = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_poisson_hmm(seqs, 3, 5, options).log_likelihood);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * options.max_iter);
}
BENCHMARK(BM_EmFit)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
