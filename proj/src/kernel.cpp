#include "sqsearch/kernel.hpp"

#include "sqsearch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace sqsearch {

RowMatrixXd sample_anchors(const RowMatrixXd& vectors, int h, std::uint64_t seed) {
  const std::int64_t n = vectors.rows();
  if (h < 1) throw std::invalid_argument("sample_anchors: h must be positive");
  if (h > n) {
    throw std::invalid_argument("sample_anchors: h = " + std::to_string(h) + " exceeds N = " +
                                std::to_string(n));
  }
  Rng rng(seed);
  const auto rows = rng.sample_without_replacement(static_cast<std::size_t>(n),
                                                   static_cast<std::size_t>(h));
  RowMatrixXd anchors(h, vectors.cols());
  for (int i = 0; i < h; ++i) anchors.row(i) = vectors.row(static_cast<std::int64_t>(rows[i]));
  return anchors;
}

double compute_sigma(const RowMatrixXd& vectors, const RowMatrixXd& anchors) {
  if (vectors.rows() == 0 || anchors.rows() == 0) {
    throw std::invalid_argument("compute_sigma: empty input");
  }
  if (vectors.cols() != anchors.cols()) {
    throw std::invalid_argument("compute_sigma: dimension mismatch");
  }
  double total = 0.0;
  for (std::int64_t i = 0; i < vectors.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < anchors.rows(); ++j) {
      best = std::min(best, (vectors.row(i) - anchors.row(j)).squaredNorm());
    }
    total += std::sqrt(best);
  }
  const double sigma = total / static_cast<double>(vectors.rows());
  if (sigma <= 0.0) {
    std::cerr << "warning: kernel bandwidth degenerated to 0 (all points duplicate anchors); "
                 "flooring at 1e-12\n";
    return 1e-12;
  }
  return sigma;
}

RowMatrixXd kernel_map(const RowMatrixXd& vectors, const KernelMap& km) {
  if (vectors.cols() != km.anchors.cols()) {
    throw std::invalid_argument("kernel_map: vector dimension " + std::to_string(vectors.cols()) +
                                " does not match anchor dimension " +
                                std::to_string(km.anchors.cols()));
  }
  if (km.sigma <= 0.0) throw std::invalid_argument("kernel_map: sigma must be positive");
  const double inv = 1.0 / (2.0 * km.sigma * km.sigma);
  RowMatrixXd out(vectors.rows(), km.anchors.rows());
  for (std::int64_t i = 0; i < vectors.rows(); ++i) {
    for (std::int64_t j = 0; j < km.anchors.rows(); ++j) {
      out(i, j) = std::exp(-(vectors.row(i) - km.anchors.row(j)).squaredNorm() * inv);
    }
  }
  return out;
}

}  // namespace sqsearch
