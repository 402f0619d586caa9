#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "multistop/common.hpp"
#include "multistop/dp.hpp"
#include "multistop/model.hpp"
#include "multistop/rng.hpp"

namespace multistop {

/// Executable scheduling rule: maps (belief, stops remaining, time) to an
/// action. Time counts decision epochs from 1.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string id() const = 0;
  virtual Action act(const Belief& pi, int stops_remaining, int time, RngStream& rng) const = 0;
};

// ---------------------------------------------------------------------------
// Linear threshold policies

/// Hyperplane coefficients theta_l in R^{S-1}, one per stop index l = 1..L
/// (theta[l - 1]). phi holds the spherical coordinates they were built from,
/// when known.
struct ThresholdParams {
  std::vector<Vector> theta;
  std::vector<Vector> phi;

  int stops() const noexcept { return static_cast<int>(theta.size()); }
  int dim() const noexcept { return theta.empty() ? 0 : static_cast<int>(theta.front().size()); }
};

/// Maps unconstrained spherical coordinates to coefficients that satisfy the
/// line-monotonicity and nesting inequalities:
///   theta_l(S-1) = phi_1(S-1)^2 prod_{k=l}^{L-1} sin^2 phi_k(S-1)
///   theta_l(S-2) = 1 + phi_1(S-2)^2 prod_{k=2}^{l} sin^2 phi_k(S-2)
///   theta_l(i)   = theta_l(S-2) prod_{k=1}^{L} sin^2 phi_k(i),  i < S-2
/// (1-based component indices, empty products equal one).
ThresholdParams theta_from_phi(const std::vector<Vector>& phi);

/// Human-readable list of violated inequalities (empty when feasible).
std::vector<std::string> feasibility_violations(const ThresholdParams& params, double tol = 0.0);

/// pi(2) + sum_{i=1}^{S-2} theta_l(i) pi(i+2) - theta_l(S-1); stop iff <= 0.
double threshold_margin(const ThresholdParams& params, const Belief& pi, int l);
Action linear_threshold_action(const ThresholdParams& params, const Belief& pi, int l);

std::vector<Vector> unflatten(const Vector& flat, int rows, int dim);
Vector flatten(const std::vector<Vector>& rows);

// ---------------------------------------------------------------------------
// Softmax policies

/// theta[l - 1][u - 1] in R^{S-1} for stop index l and action u.
struct SoftmaxParams {
  std::vector<std::array<Vector, 2>> theta;

  int stops() const noexcept { return static_cast<int>(theta.size()); }
  Vector flatten() const;
  static SoftmaxParams unflatten(const Vector& flat, int stops, int dim);
};

/// (P(stop), P(continue)) with P(u) proportional to exp([0, theta_{l,u}]' pi).
std::array<double, 2> softmax_probabilities(const SoftmaxParams& params, const Belief& pi, int l);
Action softmax_action(const SoftmaxParams& params, const Belief& pi, int l, RngStream& rng);

// ---------------------------------------------------------------------------
// Concrete policies

class LinearThresholdPolicy final : public Policy {
 public:
  explicit LinearThresholdPolicy(ThresholdParams params) : params_(std::move(params)) {}
  std::string id() const override { return "linear_threshold"; }
  Action act(const Belief& pi, int l, int, RngStream&) const override {
    return linear_threshold_action(params_, pi, l);
  }
  const ThresholdParams& params() const noexcept { return params_; }

 private:
  ThresholdParams params_;
};

class SoftmaxPolicy final : public Policy {
 public:
  explicit SoftmaxPolicy(SoftmaxParams params) : params_(std::move(params)) {}
  std::string id() const override { return "softmax"; }
  Action act(const Belief& pi, int l, int, RngStream& rng) const override {
    return softmax_action(params_, pi, l, rng);
  }
  const SoftmaxParams& params() const noexcept { return params_; }

 private:
  SoftmaxParams params_;
};

/// Greedy policy of a solved value table. At grid points this is the table's
/// action; elsewhere it is the one-step lookahead argmax (ties stop).
class GridPolicy final : public Policy {
 public:
  GridPolicy(Model model, ValueTable table) : model_(std::move(model)), table_(std::move(table)) {}
  std::string id() const override { return "grid_dp"; }
  Action act(const Belief& pi, int l, int, RngStream&) const override {
    return lookahead(model_, table_, pi, l).best();
  }
  const ValueTable& table() const noexcept { return table_; }
  const Model& model() const noexcept { return model_; }

 private:
  Model model_;
  ValueTable table_;
};

/// Stops at t = period, 2 period, ... regardless of the belief.
class PeriodicPolicy final : public Policy {
 public:
  explicit PeriodicPolicy(int period);
  std::string id() const override { return "periodic"; }
  Action act(const Belief&, int, int time, RngStream&) const override {
    return time % period_ == 0 ? Action::Stop : Action::Continue;
  }
  int period() const noexcept { return period_; }

 private:
  int period_;
};

PeriodicPolicy periodic_policy(int period);
/// floor(N / (L + 1)), at least 1.
int default_period(int horizon, int stops);

/// Applies the optimal single-stop policy at every stop, carrying the belief
/// forward, until the budget is spent.
class HeuristicPolicy final : public Policy {
 public:
  explicit HeuristicPolicy(GridPolicy single_stop) : single_(std::move(single_stop)) {}
  std::string id() const override { return "heuristic"; }
  Action act(const Belief& pi, int, int time, RngStream& rng) const override {
    return single_.act(pi, 1, time, rng);
  }
  const GridPolicy& single_stop() const noexcept { return single_; }

 private:
  GridPolicy single_;
};

HeuristicPolicy heuristic_policy(const Model& model, const BeliefGrid& grid,
                                 const SolveOptions& options = {});

class ConstantPolicy final : public Policy {
 public:
  explicit ConstantPolicy(Action action) : action_(action) {}
  std::string id() const override { return action_ == Action::Stop ? "always_stop" : "never_stop"; }
  Action act(const Belief&, int, int, RngStream&) const override { return action_; }

 private:
  Action action_;
};

// ---------------------------------------------------------------------------
// Serialization

std::string threshold_to_json(const ThresholdParams& params);
std::string softmax_to_json(const SoftmaxParams& params);
ThresholdParams threshold_from_json(const std::string& text, int states, int stops);
SoftmaxParams softmax_from_json(const std::string& text, int states, int stops);

}  // namespace multistop
