#include "sqsearch/kernel.hpp"

#include "sqsearch/rng.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace sqsearch;

TEST_CASE("sample_anchors: h = N yields the whole set as a permutation") {
  Rng rng(3);
  const auto vectors = testing::random_matrix(12, 4, rng);
  const auto anchors = sample_anchors(vectors, 12, 7);
  REQUIRE(anchors.rows() == 12);

  std::set<std::int64_t> matched;
  for (std::int64_t i = 0; i < anchors.rows(); ++i) {
    for (std::int64_t j = 0; j < vectors.rows(); ++j) {
      if (matched.count(j) == 0 && (anchors.row(i) - vectors.row(j)).norm() == 0.0) {
        matched.insert(j);
        break;
      }
    }
  }
  CHECK(matched.size() == 12);
}

TEST_CASE("sample_anchors is deterministic and rejects h > N") {
  Rng rng(4);
  const auto vectors = testing::random_matrix(100, 3, rng);
  const auto a1 = sample_anchors(vectors, 10, 42);
  const auto a2 = sample_anchors(vectors, 10, 42);
  CHECK((a1 - a2).cwiseAbs().maxCoeff() == 0.0);

  const auto single1 = sample_anchors(vectors, 1, 9);
  const auto single2 = sample_anchors(vectors, 1, 9);
  CHECK((single1 - single2).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(sample_anchors(vectors, 101, 0), std::invalid_argument);
}

TEST_CASE("compute_sigma floors the all-anchors case") {
  Rng rng(5);
  const auto vectors = testing::random_matrix(8, 3, rng);
  CHECK(compute_sigma(vectors, vectors) == 1e-12);
}

TEST_CASE("compute_sigma: single point and anchor") {
  RowMatrixXd x(1, 2), a(1, 2);
  x << 3.0, 4.0;
  a << 0.0, 0.0;
  CHECK(compute_sigma(x, a) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("compute_sigma matches the double-loop oracle and is permutation invariant") {
  Rng rng(6);
  const auto vectors = testing::random_matrix(100, 5, rng);
  const auto anchors = testing::random_matrix(10, 5, rng);

  double expected = 0.0;
  for (std::int64_t i = 0; i < vectors.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < anchors.rows(); ++j) {
      best = std::min(best, (vectors.row(i) - anchors.row(j)).norm());
    }
    expected += best;
  }
  expected /= static_cast<double>(vectors.rows());
  CHECK(compute_sigma(vectors, anchors) == doctest::Approx(expected).epsilon(1e-12));

  // Permute both arguments.
  RowMatrixXd vperm(vectors.rows(), vectors.cols());
  for (std::int64_t i = 0; i < vectors.rows(); ++i) vperm.row(i) = vectors.row(vectors.rows() - 1 - i);
  RowMatrixXd aperm(anchors.rows(), anchors.cols());
  for (std::int64_t i = 0; i < anchors.rows(); ++i) aperm.row(i) = anchors.row(anchors.rows() - 1 - i);
  CHECK(compute_sigma(vperm, aperm) == doctest::Approx(compute_sigma(vectors, anchors)).epsilon(1e-12));
}

TEST_CASE("kernel_map basics") {
  Rng rng(7);
  const auto anchors = testing::random_matrix(4, 3, rng);
  KernelMap km{anchors, 0.7};

  SUBCASE("a point equal to an anchor maps to exactly 1 there") {
    RowMatrixXd x(1, 3);
    x.row(0) = anchors.row(2);
    const auto phi = kernel_map(x, km);
    CHECK(phi(0, 2) == 1.0);
    for (std::int64_t j = 0; j < phi.cols(); ++j) {
      CHECK(phi(0, j) > 0.0);
      CHECK(phi(0, j) <= 1.0);
    }
  }

  SUBCASE("huge bandwidth saturates every entry") {
    KernelMap wide{anchors, 1e12};
    const auto phi = kernel_map(testing::random_matrix(5, 3, rng), wide);
    CHECK((1.0 - phi.minCoeff()) < 1e-6);
  }

  SUBCASE("squared distance of 2 sigma^2 gives exp(-1)") {
    RowMatrixXd a(1, 1), x(1, 1);
    a << 0.0;
    const double sigma = 0.7;
    x << sigma * std::sqrt(2.0);
    const auto phi = kernel_map(x, KernelMap{a, sigma});
    CHECK(phi(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  }

  SUBCASE("dimension mismatch is an error") {
    CHECK_THROWS_AS(kernel_map(testing::random_matrix(2, 5, rng), km), std::invalid_argument);
  }

  SUBCASE("row i depends only on vector i") {
    const auto x = testing::random_matrix(6, 3, rng);
    const auto phi = kernel_map(x, km);
    RowMatrixXd reversed(x.rows(), x.cols());
    for (std::int64_t i = 0; i < x.rows(); ++i) reversed.row(i) = x.row(x.rows() - 1 - i);
    const auto phi_rev = kernel_map(reversed, km);
    for (std::int64_t i = 0; i < x.rows(); ++i) {
      CHECK((phi.row(i) - phi_rev.row(x.rows() - 1 - i)).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}
