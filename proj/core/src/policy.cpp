#include "multistop/policy.hpp"

#include <cmath>
#include <sstream>

namespace multistop {

namespace {

double sin2(double x) {
  const double s = std::sin(x);
  return s * s;
}

}  // namespace

ThresholdParams theta_from_phi(const std::vector<Vector>& phi) {
  ThresholdParams out;
  out.phi = phi;
  const int stops = static_cast<int>(phi.size());
  if (stops == 0) return out;
  const int dim = static_cast<int>(phi.front().size());
  for (const auto& row : phi) {
    if (row.size() != dim) throw ValidationError("phi: rows must share one dimension");
  }
  if (dim < 1) throw ValidationError("phi: dimension must be at least 1");
  // 1-based component c of stop index k lives at phi[k - 1][c - 1]
  auto at = [&](int k, int c) { return phi[static_cast<std::size_t>(k - 1)][c - 1]; };
  const int last = dim;      // S - 1
  const int second = dim - 1;  // S - 2 (absent when S = 2)

  out.theta.assign(static_cast<std::size_t>(stops), Vector::Zero(dim));
  for (int l = 1; l <= stops; ++l) {
    Vector& th = out.theta[static_cast<std::size_t>(l - 1)];
    double prod = 1.0;
    for (int k = l; k <= stops - 1; ++k) prod *= sin2(at(k, last));
    th[last - 1] = at(1, last) * at(1, last) * prod;
    if (second >= 1) {
      prod = 1.0;
      for (int k = 2; k <= l; ++k) prod *= sin2(at(k, second));
      th[second - 1] = 1.0 + at(1, second) * at(1, second) * prod;
      for (int i = 1; i < second; ++i) {
        prod = 1.0;
        for (int k = 1; k <= stops; ++k) prod *= sin2(at(k, i));
        th[i - 1] = th[second - 1] * prod;
      }
    }
  }
  return out;
}

std::vector<std::string> feasibility_violations(const ThresholdParams& params, double tol) {
  std::vector<std::string> out;
  const int dim = params.dim();
  const int stops = params.stops();
  auto say = [&](int l, const std::string& what) {
    std::ostringstream os;
    os << "l=" << l << ": " << what;
    out.push_back(os.str());
  };
  for (int l = 1; l <= stops; ++l) {
    const Vector& th = params.theta[static_cast<std::size_t>(l - 1)];
    if (th[dim - 1] < -tol) say(l, "offset coefficient is negative");
    if (dim >= 2) {
      const double pivot = th[dim - 2];
      if (pivot < 1.0 - tol) say(l, "pivot coefficient below 1");
      for (int i = 0; i < dim - 1; ++i) {
        if (th[i] < -tol) say(l, "coefficient " + std::to_string(i + 1) + " is negative");
        if (i < dim - 2 && th[i] > pivot + tol) {
          say(l, "coefficient " + std::to_string(i + 1) + " exceeds the pivot coefficient");
        }
      }
    }
    if (l >= 2) {
      const Vector& prev = params.theta[static_cast<std::size_t>(l - 2)];
      if (prev[dim - 1] > th[dim - 1] + tol) say(l, "offset smaller than at l-1");
      for (int i = 0; i < dim - 1; ++i) {
        if (prev[i] < th[i] - tol) say(l, "coefficient " + std::to_string(i + 1) + " larger than at l-1");
      }
    }
  }
  return out;
}

double threshold_margin(const ThresholdParams& params, const Belief& pi, int l) {
  const Vector& th = params.theta.at(static_cast<std::size_t>(l - 1));
  const int dim = static_cast<int>(th.size());
  double m = pi[1] - th[dim - 1];
  for (int i = 0; i + 1 < dim; ++i) m += th[i] * pi[i + 2];
  return m;
}

Action linear_threshold_action(const ThresholdParams& params, const Belief& pi, int l) {
  return threshold_margin(params, pi, l) <= 0.0 ? Action::Stop : Action::Continue;
}

std::vector<Vector> unflatten(const Vector& flat, int rows, int dim) {
  if (flat.size() != static_cast<Eigen::Index>(rows) * dim) throw ValidationError("unflatten: size mismatch");
  std::vector<Vector> out;
  for (int r = 0; r < rows; ++r) out.push_back(flat.segment(static_cast<Eigen::Index>(r) * dim, dim));
  return out;
}

Vector flatten(const std::vector<Vector>& rows) {
  Eigen::Index total = 0;
  for (const auto& r : rows) total += r.size();
  Vector out(total);
  Eigen::Index pos = 0;
  for (const auto& r : rows) {
    out.segment(pos, r.size()) = r;
    pos += r.size();
  }
  return out;
}

Vector SoftmaxParams::flatten() const {
  std::vector<Vector> rows;
  for (const auto& pair : theta) {
    rows.push_back(pair[0]);
    rows.push_back(pair[1]);
  }
  return multistop::flatten(rows);
}

SoftmaxParams SoftmaxParams::unflatten(const Vector& flat, int stops, int dim) {
  auto rows = multistop::unflatten(flat, 2 * stops, dim);
  SoftmaxParams p;
  for (int l = 0; l < stops; ++l) p.theta.push_back({rows[2 * l], rows[2 * l + 1]});
  return p;
}

std::array<double, 2> softmax_probabilities(const SoftmaxParams& params, const Belief& pi, int l) {
  const auto& pair = params.theta.at(static_cast<std::size_t>(l - 1));
  const auto tail = pi.tail(pi.size() - 1);
  const double a = pair[0].dot(tail);
  const double b = pair[1].dot(tail);
  const double m = std::max(a, b);
  const double ea = std::exp(a - m);
  const double eb = std::exp(b - m);
  return {ea / (ea + eb), eb / (ea + eb)};
}

Action softmax_action(const SoftmaxParams& params, const Belief& pi, int l, RngStream& rng) {
  return rng.uniform() < softmax_probabilities(params, pi, l)[0] ? Action::Stop : Action::Continue;
}

PeriodicPolicy::PeriodicPolicy(int period) : period_(period) {
  if (period < 1) throw ValidationError("periodic policy: period must be at least 1");
}

PeriodicPolicy periodic_policy(int period) { return PeriodicPolicy(period); }

int default_period(int horizon, int stops) { return std::max(1, horizon / (stops + 1)); }

HeuristicPolicy heuristic_policy(const Model& model, const BeliefGrid& grid, const SolveOptions& options) {
  Model single(model.transition(), model.observation_law(), {model.reward(1)}, model.discount(), 1,
               model.initial_belief(), model.continue_penalty());
  ValueTable table = solve(single, grid, options);
  return HeuristicPolicy(GridPolicy(std::move(single), std::move(table)));
}

}  // namespace multistop
