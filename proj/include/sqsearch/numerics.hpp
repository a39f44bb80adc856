#pragma once

#include "sqsearch/types.hpp"

#include <cstdint>
#include <vector>

namespace sqsearch {

struct PcaModel {
  Eigen::VectorXd mean;                 // d
  Eigen::MatrixXd components;           // d x r, orthonormal columns
  Eigen::VectorXd explained_variance;   // r, non-increasing
};

/// Top-r principal directions of the centered covariance (eigendecomposition
/// of the d x d covariance). Requires 1 <= r <= min(N, d).
PcaModel pca_fit(const RowMatrixXd& vectors, int r);

struct KmeansResult {
  RowMatrixXd centroids;                  // k x d
  std::vector<int> assignments;           // N, nearest centroid per point
  std::vector<double> distortion_history; // within-cluster SSQ per iteration
  int iterations = 0;
};

/// Lloyd's algorithm. Empty clusters are reseeded to the point farthest from
/// its current centroid. Assignments returned are nearest-centroid under the
/// returned centroids; ties break to the smallest index.
KmeansResult kmeans(const RowMatrixXd& vectors, int k, int max_iter, std::uint64_t seed);

/// Solves (A + ridge*I) X = B for symmetric positive definite A + ridge*I
/// via Cholesky. Throws a singularity error when the factorization fails.
Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double ridge);

}  // namespace sqsearch
