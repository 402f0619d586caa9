#pragma once

#include <optional>
#include <string>
#include <vector>

#include "multistop/common.hpp"
#include "multistop/dp.hpp"
#include "multistop/grid.hpp"
#include "multistop/model.hpp"
#include "multistop/policy.hpp"
#include "multistop/rng.hpp"

namespace multistop {

enum class Verdict { True, False, Unknown };

std::string to_string(Verdict v);

/// Counterexample attached to a False verdict.
struct Witness {
  std::string description;
  std::vector<int> indices;  // 1-based where they name matrix entries or stop indices
  Belief point;              // empty when not applicable
};

struct OrderingVerdict {
  Verdict holds = Verdict::True;
  std::optional<Witness> witness;

  bool ok() const noexcept { return holds == Verdict::True; }
  static OrderingVerdict yes() { return {}; }
  static OrderingVerdict unknown() { return {Verdict::Unknown, std::nullopt}; }
  static OrderingVerdict no(Witness w) { return {Verdict::False, std::move(w)}; }
};

inline constexpr double kProductTolerance = 1e-12;
inline constexpr double kQuadraticTolerance = 1e-10;

/// Every 2x2 minor (i1 < i2, j1 < j2) is >= -tol. Witness indices are
/// (i1, i2, j1, j2), 1-based.
OrderingVerdict is_tp2(const Matrix& a, double tol = kProductTolerance);

/// p1 >=_r p2: p1(j) p2(i) <= p2(j) p1(i) + tol for all i < j (e_1 is the
/// largest element).
bool mlr_geq(const Belief& p1, const Belief& p2, double tol = kProductTolerance);

/// Tail sums sum_{i>=j} p1(i) <= sum_{i>=j} p2(i) + tol for every j, the
/// orientation in which mlr_geq implies fosd_geq.
bool fosd_geq(const Belief& p1, const Belief& p2, double tol = kProductTolerance);

struct AssumptionReport {
  OrderingVerdict tp2_transition;   // A1
  OrderingVerdict tp2_observation;  // A2
  /// Observation labels carry no order of their own; A2 also passes when B
  /// is TP2 with its columns reversed (counts listed high to low).
  bool observation_order_reversed = false;
  std::vector<OrderingVerdict> decreasing_reward_gap;  // A3, one per r_l
  /// Whether A1 and A3 imply decreasing r_l is borne out, per r_l.
  std::vector<bool> rewards_decreasing;
  bool shared_reward = true;
  std::vector<std::string> warnings;

  bool a3() const;
  bool all() const { return tp2_transition.ok() && tp2_observation.ok() && a3(); }
};

AssumptionReport check_assumptions(const Model& model);
std::string assumption_report_json(const AssumptionReport& report, int indent = 2);

/// The S x S matrices Gamma^j, j = 1..S-1, with
/// Gamma^j_{mn} = (gamma^j_{mn} + gamma^j_{nm}) / 2 and
/// gamma^j_{mn} = P(m, j) Q(n, j+1) - P(m, j+1) Q(n, j).
std::vector<Matrix> copositivity_matrices(const Matrix& p, const Matrix& q);

/// P <= Q in the copositive order: every Gamma^j is copositive on the
/// simplex. True when a sufficient certificate holds (nonnegative entries or
/// positive semidefinite), False with a witness belief when a sampled simplex
/// point gives a negative quadratic form, Unknown otherwise.
OrderingVerdict copositive_leq(const Matrix& p, const Matrix& q, int grid_density = 50,
                               double tol = kQuadraticTolerance);

/// Segment {(1 - eps) anchor + eps e_vertex}, anchor(vertex) == 0.
struct Line {
  Belief anchor;
  int vertex = 0;  // 1-based: 1 or S
  std::vector<double> eps;

  Belief point(double e) const;
};

/// Anchors uniform on the face opposite the vertex; eps on a uniform grid.
std::vector<Line> sample_lines(int states, int vertex, std::size_t count, RngStream& rng,
                               int eps_points = 50);

/// Along each line, ordered from MLR-smallest to MLR-largest point, the
/// action sequence must be nonincreasing (continue before stop).
OrderingVerdict policy_monotone_on_lines(const Policy& policy, int l, const std::vector<Line>& lines);

/// Number of maximal runs of Stop along the line.
int stop_runs_on_line(const Policy& policy, int l, const Line& line);

/// Every grid point that stops with l - 1 stops remaining also stops with l.
OrderingVerdict nested_sets(const StopSets& sets);

/// Stop indicators of an arbitrary policy over a grid.
StopSets policy_stop_sets(const Policy& policy, const BeliefGrid& grid, int stops);

}  // namespace multistop
