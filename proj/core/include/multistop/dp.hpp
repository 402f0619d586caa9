#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "multistop/common.hpp"
#include "multistop/grid.hpp"
#include "multistop/model.hpp"

namespace multistop {

enum class ValueInit {
  /// V_0(pi, l): expected reward of stopping l times in a row starting at pi.
  RepeatedStop,
  Zero,
};

struct SolveOptions {
  double tol = 1e-6;
  int max_iter = 10000;
  ValueInit init = ValueInit::RepeatedStop;
};

/// Values and greedy actions of the L-stop Bellman equation on a grid.
/// Column l of values() holds V(., l) for l = 0..L (column 0 is zero);
/// policy column l - 1 holds the action with l stops remaining.
class ValueTable {
 public:
  ValueTable(BeliefGrid grid, Matrix values, Eigen::MatrixXi policy, int iterations,
             double residual, bool converged);

  const BeliefGrid& grid() const noexcept { return grid_; }
  int stops() const noexcept { return static_cast<int>(values_.cols()) - 1; }
  const Matrix& values() const noexcept { return values_; }
  double value(std::size_t point, int l) const { return values_(static_cast<Eigen::Index>(point), l); }
  Action action(std::size_t point, int l) const {
    return static_cast<Action>(policy_(static_cast<Eigen::Index>(point), l - 1));
  }
  const Eigen::MatrixXi& policy() const noexcept { return policy_; }
  /// W(pi, l) = V(pi, l) - V(pi, l - 1), l = 1..L.
  double increment(std::size_t point, int l) const { return value(point, l) - value(point, l - 1); }

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }
  bool converged() const noexcept { return converged_; }

 private:
  BeliefGrid grid_;
  Matrix values_;
  Eigen::MatrixXi policy_;
  int iterations_;
  double residual_;
  bool converged_;
};

/// Successive approximation of the Bellman equation until the sup-norm change
/// drops below options.tol. Off-grid successor beliefs use the nearest grid
/// point. Requires discount < 1; throws ConvergenceError on max_iter.
ValueTable solve(const Model& model, const BeliefGrid& grid, const SolveOptions& options = {});

/// Exactly `sweeps` Bellman sweeps from the chosen initialization (the
/// horizon-`sweeps` truncated problem when init is Zero). Accepts discount 1.
ValueTable iterate(const Model& model, const BeliefGrid& grid, int sweeps, ValueInit init);

/// Q(pi, l, 1) and Q(pi, l, 2) at an arbitrary belief, using the table's
/// values at the nearest grid points of the successor beliefs.
struct QValues {
  double stop = 0.0;
  double go_on = 0.0;
  Action best() const noexcept { return stop >= go_on ? Action::Stop : Action::Continue; }
  double value() const noexcept { return stop >= go_on ? stop : go_on; }
};
QValues lookahead(const Model& model, const ValueTable& table, const Belief& pi, int l);

/// max_u Q(pi, l, u) via lookahead().
double value_at(const Model& model, const ValueTable& table, const Belief& pi, int l);

/// V at the nearest grid point (no lookahead).
double value_nearest(const ValueTable& table, const Belief& pi, int l);

/// Expected value when the first decision is taken after one observation:
/// rho * sum_y sigma(pi, y) V(T(pi, y), l).
double continue_value(const Model& model, const ValueTable& table, const Belief& pi, int l);

/// indicator[l - 1][i] is true iff the table stops at grid point i with l
/// stops remaining.
struct StopSets {
  std::vector<std::vector<bool>> indicator;
  int stops() const noexcept { return static_cast<int>(indicator.size()); }
};
StopSets stopping_sets(const ValueTable& table);

/// Rows "pi_1,...,pi_S,l,action" for every grid point and l.
std::string stopping_sets_csv(const ValueTable& table);

/// Violation counts for the value-in-l properties on the grid.
struct IncrementReport {
  std::size_t value_decreases = 0;      // V(pi, l) < V(pi, l - 1)
  std::size_t increment_increases = 0;  // W(pi, l) > W(pi, l - 1)
};
IncrementReport check_increments(const ValueTable& table, double tol = 1e-9);

/// Upper bound L * Rbar / |Rlow| on the time of the last stop of an optimal
/// policy when continuing costs at least |Rlow| per step.
double finite_stop_bound(int stops, double max_stop_reward, double continue_reward_floor);
double finite_stop_bound(const Model& model);

/// Smallest N >= 0 with rho^N / (1 - rho) * max|r| <= epsilon.
int horizon_for_tolerance(double discount, double max_abs_reward, double epsilon);
int horizon_for_tolerance(const Model& model, double epsilon);

std::string table_to_json(const ValueTable& table, const std::string& scenario_hash,
                          std::uint64_t seed);
ValueTable load_table(const std::filesystem::path& path);

}  // namespace multistop
