#pragma once

#include <cstddef>
#include <functional>

namespace multistop {

/// Caps the number of worker threads used by parallel loops (0 = hardware).
void set_max_threads(unsigned n);
unsigned max_threads();

/// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
/// write to disjoint slots so the result does not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Pairwise (cascade) summation; deterministic for a given input order.
double pairwise_sum(const double* data, std::size_t n);

}  // namespace multistop
