#pragma once

#include "netanom/types.hpp"

#include <cstdint>

namespace netanom::base {

// Average unsuccessful-search path length in a BST of n nodes; the isolation
// forest normalizer c(n) = 2 H(n-1) - 2 (n-1)/n, H(i) = ln(i) + Euler gamma.
double average_path_length(std::int64_t n);

// score(x) = 2^(-E[h(x)] / c(subsample)); higher = more anomalous, in (0,1).
// subsample > n clamps to n, which also makes scores exactly row-permutation
// equivariant (no row sampling left).
VecD isolation_forest_score(const Matrix& features, int n_trees = 100, int subsample = 256,
                            std::uint64_t seed = 1, int threads = 1);

// Standard LOF over Euclidean distances: ~1 inliers, >1 outliers. Neighbor
// sets include k-distance ties, so results are row-order independent.
VecD lof_score(const Matrix& features, int k = 20, int threads = 1);

// 1 for scores strictly above the (1 - contamination) nearest-rank quantile.
VecI threshold_by_quantile(const VecD& scores, double contamination);

}  // namespace netanom::base
