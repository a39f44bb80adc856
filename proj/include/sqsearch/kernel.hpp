#pragma once

#include "sqsearch/types.hpp"

#include <cstdint>

namespace sqsearch {

/// Gaussian kernel representation against a set of anchor points:
/// feature j of x is exp(-||x - a_j||^2 / (2 sigma^2)).
struct KernelMap {
  RowMatrixXd anchors;  // h x d
  double sigma = 0.0;

  int anchor_count() const { return static_cast<int>(anchors.rows()); }
  int input_dim() const { return static_cast<int>(anchors.cols()); }
};

/// Samples h distinct rows uniformly without replacement.
RowMatrixXd sample_anchors(const RowMatrixXd& vectors, int h, std::uint64_t seed);

/// Mean over points of the distance to the nearest anchor. A zero result
/// (every point duplicates an anchor) is floored at 1e-12 with a warning.
double compute_sigma(const RowMatrixXd& vectors, const RowMatrixXd& anchors);

/// Maps N x d vectors to N x h kernel features; all outputs in (0, 1].
RowMatrixXd kernel_map(const RowMatrixXd& vectors, const KernelMap& km);

}  // namespace sqsearch
