#include "sqsearch/numerics.hpp"

#include "sqsearch/rng.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace sqsearch {

PcaModel pca_fit(const RowMatrixXd& vectors, int r) {
  const std::int64_t n = vectors.rows();
  const std::int64_t d = vectors.cols();
  if (r < 1 || r > std::min(n, d)) {
    throw std::invalid_argument("pca_fit: r = " + std::to_string(r) +
                                " outside [1, min(N, d)] = [1, " +
                                std::to_string(std::min(n, d)) + "]");
  }

  PcaModel model;
  model.mean = vectors.colwise().mean();
  Eigen::MatrixXd centered = vectors.rowwise() - model.mean.transpose();
  Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(std::max<std::int64_t>(1, n - 1));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("pca_fit: eigendecomposition failed");
  }

  // Eigenvalues come out ascending; take the top r in descending order.
  model.components.resize(d, r);
  model.explained_variance.resize(r);
  for (int j = 0; j < r; ++j) {
    model.components.col(j) = solver.eigenvectors().col(d - 1 - j);
    model.explained_variance(j) = std::max(0.0, solver.eigenvalues()(d - 1 - j));
  }
  return model;
}

namespace {

// Nearest centroid with ties to the smallest index.
int nearest_centroid(const RowMatrixXd& centroids, const Eigen::RowVectorXd& point,
                     double* best_dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::int64_t c = 0; c < centroids.rows(); ++c) {
    const double dist = (point - centroids.row(c)).squaredNorm();
    if (dist < best_d) {
      best_d = dist;
      best = static_cast<int>(c);
    }
  }
  if (best_dist != nullptr) *best_dist = best_d;
  return best;
}

}  // namespace

KmeansResult kmeans(const RowMatrixXd& vectors, int k, int max_iter, std::uint64_t seed) {
  const std::int64_t n = vectors.rows();
  if (k < 1) throw std::invalid_argument("kmeans: k must be positive");
  if (k > n) {
    throw std::invalid_argument("kmeans: k = " + std::to_string(k) + " exceeds N = " +
                                std::to_string(n));
  }
  if (max_iter < 1) throw std::invalid_argument("kmeans: max_iter must be positive");

  KmeansResult result;
  Rng rng(seed);
  const auto init =
      rng.sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(k));
  result.centroids.resize(k, vectors.cols());
  for (int c = 0; c < k; ++c) {
    result.centroids.row(c) = vectors.row(static_cast<std::int64_t>(init[c]));
  }
  result.assignments.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> point_dist(static_cast<std::size_t>(n), 0.0);

  for (int iter = 0;; ++iter) {
    // Assignment step.
    bool changed = false;
    double distortion = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      double dist = 0.0;
      const int c = nearest_centroid(result.centroids, vectors.row(i), &dist);
      if (c != result.assignments[static_cast<std::size_t>(i)]) changed = true;
      result.assignments[static_cast<std::size_t>(i)] = c;
      point_dist[static_cast<std::size_t>(i)] = dist;
      distortion += dist;
    }
    result.distortion_history.push_back(distortion);
    result.iterations = iter + 1;
    if ((!changed && iter > 0) || iter + 1 >= max_iter) break;

    // Update step.
    RowMatrixXd sums = RowMatrixXd::Zero(k, vectors.cols());
    std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
    for (std::int64_t i = 0; i < n; ++i) {
      const int c = result.assignments[static_cast<std::size_t>(i)];
      sums.row(c) += vectors.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    std::vector<char> reseeded(static_cast<std::size_t>(n), 0);
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        result.centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
    // Recompute the distances that moved, then reseed empty clusters to the
    // point farthest from its own centroid.
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      std::int64_t far_idx = -1;
      double far_dist = -1.0;
      for (std::int64_t i = 0; i < n; ++i) {
        if (reseeded[static_cast<std::size_t>(i)] != 0) continue;
        const int a = result.assignments[static_cast<std::size_t>(i)];
        const double dist = (vectors.row(i) - result.centroids.row(a)).squaredNorm();
        if (dist > far_dist) {
          far_dist = dist;
          far_idx = i;
        }
      }
      result.centroids.row(c) = vectors.row(far_idx);
      result.assignments[static_cast<std::size_t>(far_idx)] = c;
      reseeded[static_cast<std::size_t>(far_idx)] = 1;
    }
  }
  return result;
}

Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double ridge) {
  if (A.rows() != A.cols()) throw std::invalid_argument("solve_spd: A must be square");
  if (A.rows() != B.rows()) throw std::invalid_argument("solve_spd: A and B row counts differ");
  if (ridge < 0.0) throw std::invalid_argument("solve_spd: ridge must be nonnegative");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw std::invalid_argument("solve_spd: A is not symmetric");
  }

  Eigen::MatrixXd system = A;
  system.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error(
        "solve_spd: matrix is numerically singular; supply a positive ridge");
  }
  return llt.solve(B);
}

}  // namespace sqsearch
