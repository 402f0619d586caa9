#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <multistop/model.hpp>
#include <multistop/rng.hpp>

namespace multistop::testing {

inline std::string scenario_path(const std::string& name) {
  return std::string(MULTISTOP_SCENARIO_DIR) + "/" + name;
}

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Matrix example_transition() {
  Matrix p(3, 3);
  p << 0.2, 0.1, 0.7,
       0.1, 0.1, 0.8,
       0.0, 0.1, 0.9;
  return p;
}

inline Vector example_rates() { return vec({12, 7, 2}); }

/// Three-state engagement model with Poisson counts and rewards (9, 3, 1).
inline Model example_model(double rho = 0.97, std::vector<Vector> rewards = {vec({9, 3, 1})}, int stops = 5) {
  return Model(example_transition(), PoissonObservation{example_rates(), 0}, std::move(rewards), rho, stops,
               Vector::Constant(3, 1.0 / 3.0));
}

inline Matrix random_stochastic(RngStream& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) m.row(i) = rng.dirichlet_ones(cols).transpose();
  return m;
}

/// Row-normalized kernel exp(a_i b_j) w_j with a, b sorted decreasing; TP2 by
/// construction (column weights keep it so).
inline Matrix random_tp2(RngStream& rng, int rows, int cols, double spread = 3.0) {
  std::vector<double> a(static_cast<std::size_t>(rows)), b(static_cast<std::size_t>(cols));
  for (auto& x : a) x = spread * rng.uniform();
  for (auto& x : b) x = spread * rng.uniform();
  std::sort(a.begin(), a.end(), std::greater<>());
  std::sort(b.begin(), b.end(), std::greater<>());
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    const double w = 0.2 + rng.uniform();
    for (int i = 0; i < rows; ++i) m(i, j) = std::exp(a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(j)]) * w;
  }
  for (int i = 0; i < rows; ++i) m.row(i) /= m.row(i).sum();
  return m;
}

inline Model random_explicit_model(RngStream& rng, int states, int symbols, int stops, double rho) {
  Vector r(states);
  for (int i = 0; i < states; ++i) r[i] = rng.uniform() * 5.0;
  return Model(random_stochastic(rng, states, states), ExplicitObservation{random_stochastic(rng, states, symbols)},
               {r}, rho, stops, rng.dirichlet_ones(states));
}

/// pi2 reweighted by a decreasing positive vector; MLR-larger than pi2 when
/// e_1 is the top of the order.
inline Belief mlr_raise(const Belief& pi, RngStream& rng) {
  Vector w(pi.size());
  double level = 1.0;
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    w[i] = level;
    level *= rng.uniform();
  }
  Belief out = pi.cwiseProduct(w);
  return out / out.sum();
}

}  // namespace multistop::testing
