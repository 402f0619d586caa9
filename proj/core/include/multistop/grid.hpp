#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "multistop/common.hpp"

namespace multistop {

/// Regular lattice on the belief simplex: every belief whose coordinates are
/// integer multiples of 1/M. Points are stored in lexicographic order of
/// their integer coordinates.
class BeliefGrid {
 public:
  BeliefGrid(int states, int resolution);

  int states() const noexcept { return states_; }
  int resolution() const noexcept { return resolution_; }
  std::size_t size() const noexcept { return counts_.size(); }

  /// Coordinates of point i as probabilities.
  const Belief& point(std::size_t i) const { return points_[i]; }
  /// Integer coordinates of point i (they sum to the resolution).
  const std::vector<int>& counts(std::size_t i) const { return counts_[i]; }

  /// Euclidean-nearest grid point; ties go to the lexicographically smallest
  /// integer coordinates.
  std::size_t nearest(const Belief& pi) const;
  /// Index of the point with the given integer coordinates, or size() when
  /// the coordinates are not on the grid.
  std::size_t index_of(const std::vector<int>& counts) const;

  /// C(M + S - 1, S - 1).
  static std::uint64_t point_count(int states, int resolution);
  /// Smallest resolution whose point count reaches min_points.
  static int resolution_for(int states, std::size_t min_points);

 private:
  std::uint64_t key(const std::vector<int>& counts) const;

  int states_;
  int resolution_;
  std::vector<std::vector<int>> counts_;
  std::vector<Belief> points_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

}  // namespace multistop
