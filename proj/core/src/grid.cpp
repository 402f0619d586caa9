#include "multistop/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace multistop {

namespace {

void enumerate(int states, int remaining, std::vector<int>& current,
               std::vector<std::vector<int>>& out) {
  const auto pos = current.size();
  if (static_cast<int>(pos) == states - 1) {
    current.push_back(remaining);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int c = 0; c <= remaining; ++c) {
    current.push_back(c);
    enumerate(states, remaining - c, current, out);
    current.pop_back();
  }
}

}  // namespace

BeliefGrid::BeliefGrid(int states, int resolution) : states_(states), resolution_(resolution) {
  if (states < 2) throw ValidationError("grid: need at least 2 states");
  if (resolution < 1) throw ValidationError("grid: resolution must be positive");
  std::vector<int> current;
  enumerate(states, resolution, current, counts_);
  points_.reserve(counts_.size());
  index_.reserve(counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    Belief p(states);
    for (int k = 0; k < states; ++k) p[k] = static_cast<double>(counts_[i][k]) / resolution;
    points_.push_back(std::move(p));
    index_.emplace(key(counts_[i]), i);
  }
}

std::uint64_t BeliefGrid::key(const std::vector<int>& counts) const {
  std::uint64_t k = 0;
  for (int i = 0; i + 1 < states_; ++i) k = k * static_cast<std::uint64_t>(resolution_ + 1) + counts[i];
  return k;
}

std::size_t BeliefGrid::index_of(const std::vector<int>& counts) const {
  if (static_cast<int>(counts.size()) != states_) return size();
  int total = 0;
  for (int c : counts) {
    if (c < 0 || c > resolution_) return size();
    total += c;
  }
  if (total != resolution_) return size();
  auto it = index_.find(key(counts));
  return it == index_.end() ? size() : it->second;
}

std::size_t BeliefGrid::nearest(const Belief& pi) const {
  std::vector<int> counts(states_);
  std::vector<double> frac(states_);
  int total = 0;
  for (int i = 0; i < states_; ++i) {
    const double scaled = std::clamp(pi[i], 0.0, 1.0) * resolution_;
    counts[i] = static_cast<int>(std::floor(scaled));
    frac[i] = scaled - counts[i];
    total += counts[i];
  }
  std::vector<int> order(states_);
  std::iota(order.begin(), order.end(), 0);
  // Largest fractional parts first; on ties the later index, which keeps the
  // resulting coordinates lexicographically smallest.
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (frac[a] != frac[b]) return frac[a] > frac[b];
    return a > b;
  });
  int deficit = resolution_ - total;
  for (int k = 0; deficit > 0 && k < states_; ++k, --deficit) ++counts[order[k]];
  for (int k = states_ - 1; deficit < 0 && k >= 0; --k) {
    // only reachable when the input sums above one; remove from smallest fractions
    if (counts[order[k]] > 0) {
      --counts[order[k]];
      ++deficit;
    }
  }
  return index_of(counts);
}

std::uint64_t BeliefGrid::point_count(int states, int resolution) {
  // C(M + S - 1, S - 1) with exact incremental products
  std::uint64_t c = 1;
  for (int k = 1; k <= states - 1; ++k) {
    c = c * static_cast<std::uint64_t>(resolution + k) / static_cast<std::uint64_t>(k);
  }
  return c;
}

int BeliefGrid::resolution_for(int states, std::size_t min_points) {
  int m = 1;
  while (point_count(states, m) < min_points) ++m;
  return m;
}

}  // namespace multistop
