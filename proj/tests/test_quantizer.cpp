#include "sqsearch/quantizer.hpp"

#include "sqsearch/rng.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace sqsearch;

TEST_CASE("reconstruct sums the selected elements") {
  Rng rng(41);

  SUBCASE("single dictionary returns the element itself") {
    const auto cb = testing::random_codebooks(1, 4, 3, rng);
    const std::vector<std::uint16_t> code = {2};
    CHECK((reconstruct(cb, code) - cb.element(0, 2).transpose()).norm() == 0.0);
  }

  SUBCASE("all-zero elements give the zero vector") {
    Codebooks cb;
    cb.num_dicts = 3;
    cb.dict_size = 2;
    cb.dim = 4;
    cb.elements = RowMatrixXd::Zero(6, 4);
    const std::vector<std::uint16_t> code = {0, 1, 0};
    CHECK(reconstruct(cb, code).norm() == 0.0);
  }

  SUBCASE("matches a naive summation") {
    const auto cb = testing::random_codebooks(3, 5, 6, rng);
    const auto code = testing::random_code(3, 5, rng);
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(6);
    for (int m = 0; m < 3; ++m) {
      for (int j = 0; j < 6; ++j) expected(j) += cb.elements(m * 5 + code[m], j);
    }
    CHECK((reconstruct(cb, code) - expected).norm() == 0.0);
  }

  SUBCASE("out-of-range index throws") {
    const auto cb = testing::random_codebooks(2, 3, 2, rng);
    const std::vector<std::uint16_t> code = {0, 3};
    CHECK_THROWS_AS(reconstruct(cb, code), std::out_of_range);
  }
}

TEST_CASE("inter_dict_product") {
  Rng rng(42);

  SUBCASE("single dictionary has no pairs") {
    const auto cb = testing::random_codebooks(1, 3, 4, rng);
    const std::vector<std::uint16_t> code = {1};
    CHECK(inter_dict_product(cb, code) == 0.0);
  }

  SUBCASE("orthogonal selections give zero") {
    Codebooks cb;
    cb.num_dicts = 2;
    cb.dict_size = 1;
    cb.dim = 2;
    cb.elements = RowMatrixXd::Zero(2, 2);
    cb.elements(0, 0) = 3.0;
    cb.elements(1, 1) = 5.0;
    const std::vector<std::uint16_t> code = {0, 0};
    CHECK(inter_dict_product(cb, code) == doctest::Approx(0.0).epsilon(1e-15));
  }

  SUBCASE("hand-computed two-dictionary case") {
    Codebooks cb;
    cb.num_dicts = 2;
    cb.dict_size = 1;
    cb.dim = 2;
    cb.elements = RowMatrixXd::Zero(2, 2);
    cb.elements(0, 0) = 1.0;
    cb.elements(1, 0) = 2.0;
    const std::vector<std::uint16_t> code = {0, 0};
    CHECK(inter_dict_product(cb, code) == doctest::Approx(4.0).epsilon(1e-15));
  }

  SUBCASE("matches the ordered-pair double loop") {
    for (int trial = 0; trial < 50; ++trial) {
      const int m = 1 + static_cast<int>(rng.uniform_index(5));
      const auto cb = testing::random_codebooks(m, 4, 5, rng);
      const auto code = testing::random_code(m, 4, rng);
      double pairs = 0.0;
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
          if (i == j) continue;
          pairs += cb.element(i, code[static_cast<std::size_t>(i)])
                       .dot(cb.element(j, code[static_cast<std::size_t>(j)]));
        }
      }
      const double got = inter_dict_product(cb, code);
      CHECK(std::abs(got - pairs) <= 1e-12 * (1.0 + std::abs(pairs)));
    }
  }
}

TEST_CASE("quantization_error") {
  Rng rng(43);
  const auto cb = testing::random_codebooks(2, 3, 4, rng);

  SUBCASE("exact reconstructions give zero") {
    CodeMatrix codes(3, 2);
    RowMatrixXd Z(3, 4);
    for (int n = 0; n < 3; ++n) {
      codes(n, 0) = static_cast<std::uint16_t>(n % 3);
      codes(n, 1) = static_cast<std::uint16_t>((n + 1) % 3);
      Z.row(n) = reconstruct(cb, codes.row(n)).transpose();
    }
    CHECK(quantization_error(cb, codes, Z) == 0.0);
  }

  SUBCASE("unit offset on one point") {
    Codebooks single;
    single.num_dicts = 1;
    single.dict_size = 1;
    single.dim = 3;
    single.elements = testing::random_matrix(1, 3, rng);
    CodeMatrix codes(1, 1);
    RowMatrixXd Z(1, 3);
    Z.row(0) = single.elements.row(0);
    Z(0, 0) += 1.0;
    CHECK(quantization_error(single, codes, Z) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("matches the per-point oracle") {
    CodeMatrix codes(10, 2);
    for (int n = 0; n < 10; ++n) {
      codes(n, 0) = static_cast<std::uint16_t>(rng.uniform_index(3));
      codes(n, 1) = static_cast<std::uint16_t>(rng.uniform_index(3));
    }
    const auto Z = testing::random_matrix(10, 4, rng);
    double expected = 0.0;
    for (int n = 0; n < 10; ++n) {
      expected += (Z.row(n).transpose() - reconstruct(cb, codes.row(n))).squaredNorm();
    }
    CHECK(quantization_error(cb, codes, Z) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("distance identity holds to 1e-9 relative error") {
  // || q - sum_m c_m ||^2 == sum_m ||q - c_m||^2 - (M-1)||q||^2 + sum_{i != j} c_i . c_j
  Rng rng(44);
  const int ms[] = {1, 2, 4, 8};
  const int rs[] = {2, 8, 64};
  int trials = 0;
  for (int m : ms) {
    for (int r : rs) {
      for (int t = 0; t < 90; ++t, ++trials) {
        const auto cb = testing::random_codebooks(m, 4, r, rng);
        const auto code = testing::random_code(m, 4, rng);
        Eigen::VectorXd q(r);
        for (int j = 0; j < r; ++j) q(j) = rng.normal();

        const double lhs = (q - reconstruct(cb, code)).squaredNorm();
        double rhs = 0.0;
        for (int mi = 0; mi < m; ++mi) {
          rhs += (q.transpose() - cb.element(mi, code[static_cast<std::size_t>(mi)])).squaredNorm();
        }
        rhs -= static_cast<double>(m - 1) * q.squaredNorm();
        rhs += inter_dict_product(cb, code);
        CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(lhs)));
      }
    }
  }
  CHECK(trials >= 1000);
}

TEST_CASE("pq_train") {
  Rng rng(45);

  SUBCASE("N = K distinct points with one dictionary quantize exactly") {
    const auto Z = testing::random_matrix(6, 4, rng);
    const auto [cb, codes] = pq_train(Z, 1, 6, 3);
    CHECK(quantization_error(cb, codes, Z) == doctest::Approx(0.0).epsilon(1e-20));
  }

  SUBCASE("a constant chunk collapses its centroids") {
    RowMatrixXd Z = testing::random_matrix(20, 4, rng);
    Z.col(2).setConstant(7.0);
    Z.col(3).setConstant(-1.0);
    const auto [cb, codes] = pq_train(Z, 2, 3, 4);
    // Chunk 1 covers columns 2..3; all its centroids equal (7, -1).
    for (int k = 0; k < 3; ++k) {
      CHECK(cb.element(1, k)(2) == doctest::Approx(7.0).epsilon(1e-8));
      CHECK(cb.element(1, k)(3) == doctest::Approx(-1.0).epsilon(1e-8));
      // Embedded outside its chunk the element is zero.
      CHECK(cb.element(1, k)(0) == 0.0);
      CHECK(cb.element(1, k)(1) == 0.0);
    }
  }

  SUBCASE("beats random code assignment") {
    const auto Z = testing::random_matrix(64, 6, rng);
    const auto [cb, codes] = pq_train(Z, 2, 4, 9);
    const double trained = quantization_error(cb, codes, Z);

    CodeMatrix random_codes(64, 2);
    for (int n = 0; n < 64; ++n) {
      random_codes(n, 0) = static_cast<std::uint16_t>(rng.uniform_index(4));
      random_codes(n, 1) = static_cast<std::uint16_t>(rng.uniform_index(4));
    }
    CHECK(trained <= quantization_error(cb, random_codes, Z));
  }

  SUBCASE("codes are chunk-wise nearest-centroid") {
    const auto Z = testing::random_matrix(40, 6, rng);
    const auto [cb, codes] = pq_train(Z, 3, 4, 11);
    // Swapping any single chunk code never reduces that point's error.
    for (int n = 0; n < 40; ++n) {
      const double base = (Z.row(n).transpose() - reconstruct(cb, codes.row(n))).squaredNorm();
      std::vector<std::uint16_t> alt(codes.row(n).begin(), codes.row(n).end());
      for (int m = 0; m < 3; ++m) {
        const auto keep = alt[static_cast<std::size_t>(m)];
        for (int k = 0; k < 4; ++k) {
          alt[static_cast<std::size_t>(m)] = static_cast<std::uint16_t>(k);
          const double other = (Z.row(n).transpose() - reconstruct(cb, alt)).squaredNorm();
          CHECK(base <= other + 1e-9);
        }
        alt[static_cast<std::size_t>(m)] = keep;
      }
    }
  }

  SUBCASE("width not divisible by M still works") {
    const auto Z = testing::random_matrix(30, 5, rng);
    const auto [cb, codes] = pq_train(Z, 2, 4, 13);
    CHECK(cb.dim == 5);
    // Codes stay chunk-wise optimal in the unpadded space.
    for (int n = 0; n < 30; ++n) {
      const double base = (Z.row(n).transpose() - reconstruct(cb, codes.row(n))).squaredNorm();
      std::vector<std::uint16_t> alt(codes.row(n).begin(), codes.row(n).end());
      for (int m = 0; m < 2; ++m) {
        const auto keep = alt[static_cast<std::size_t>(m)];
        for (int k = 0; k < 4; ++k) {
          alt[static_cast<std::size_t>(m)] = static_cast<std::uint16_t>(k);
          CHECK(base <= (Z.row(n).transpose() - reconstruct(cb, alt)).squaredNorm() + 1e-9);
        }
        alt[static_cast<std::size_t>(m)] = keep;
      }
    }
  }

  SUBCASE("K > N is an error") {
    const auto Z = testing::random_matrix(3, 4, rng);
    CHECK_THROWS_AS(pq_train(Z, 1, 4, 0), std::invalid_argument);
  }
}

TEST_CASE("extend_codebooks") {
  Rng rng(46);
  const auto Z = testing::random_matrix(20, 6, rng);
  const auto [cb, codes] = pq_train(Z, 2, 4, 21);

  const auto [ext, ext_codes] = extend_codebooks(cb, codes, 4, 77);
  CHECK(ext.num_dicts == 4);
  CHECK(ext_codes.dicts() == 4);

  SUBCASE("reconstructions are unchanged by the zero extension") {
    for (int n = 0; n < 20; ++n) {
      const auto before = reconstruct(cb, codes.row(n));
      const auto after = reconstruct(ext, ext_codes.row(n));
      CHECK((before - after).norm() == 0.0);
    }
  }

  SUBCASE("existing codes and elements are preserved verbatim") {
    CHECK((ext.elements.topRows(8) - cb.elements).cwiseAbs().maxCoeff() == 0.0);
    for (int n = 0; n < 20; ++n) {
      CHECK(ext_codes(n, 0) == codes(n, 0));
      CHECK(ext_codes(n, 1) == codes(n, 1));
    }
  }

  SUBCASE("same seed reproduces the random columns") {
    const auto [ext2, ext_codes2] = extend_codebooks(cb, codes, 4, 77);
    CHECK(ext_codes2 == ext_codes);
  }

  SUBCASE("must strictly grow") {
    CHECK_THROWS_AS(extend_codebooks(cb, codes, 2, 0), std::invalid_argument);
  }
}
