#include "sqsearch/lbfgs.hpp"

#include "sqsearch/numerics.hpp"
#include "sqsearch/rng.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace sqsearch;

TEST_CASE("lbfgs solves a quadratic bowl") {
  Eigen::VectorXd target(3);
  target << 1.0, -2.0, 0.5;
  const LbfgsObjective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2.0 * (x - target);
    return (x - target).squaredNorm();
  };
  const auto result = lbfgs_minimize(f, Eigen::VectorXd::Zero(3), LbfgsConfig{});
  CHECK((result.x - target).norm() < 1e-6);
  CHECK(result.status == LbfgsStatus::kConverged);
}

TEST_CASE("lbfgs solves 2-D Rosenbrock from the classic start") {
  const LbfgsObjective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = x(0), b = x(1);
    g.resize(2);
    g(0) = -400.0 * a * (b - a * a) - 2.0 * (1.0 - a);
    g(1) = 200.0 * (b - a * a);
    const double t1 = b - a * a, t2 = 1.0 - a;
    return 100.0 * t1 * t1 + t2 * t2;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  LbfgsConfig cfg;
  cfg.max_iterations = 200;
  cfg.gradient_tolerance = 1e-8;
  const auto result = lbfgs_minimize(f, x0, cfg);
  CHECK(std::abs(result.x(0) - 1.0) < 1e-4);
  CHECK(std::abs(result.x(1) - 1.0) < 1e-4);
}

TEST_CASE("lbfgs matches the linear solver on a convex quadratic") {
  Rng rng(31);
  const int n = 10;
  const auto R = testing::random_matrix(n, n, rng);
  Eigen::MatrixXd A = R.transpose() * R + Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) b(i) = rng.normal();

  const LbfgsObjective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = A * x - b;
    return 0.5 * x.dot(A * x) - b.dot(x);
  };
  LbfgsConfig cfg;
  cfg.gradient_tolerance = 1e-8;
  const auto result = lbfgs_minimize(f, Eigen::VectorXd::Zero(n), cfg);

  const Eigen::MatrixXd expected = solve_spd(A, b, 0.0);
  CHECK((result.x - expected.col(0)).norm() < 1e-5);
}

TEST_CASE("lbfgs never returns a value above the starting one") {
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(6));
    Eigen::VectorXd shift(n), x0(n);
    for (int i = 0; i < n; ++i) {
      shift(i) = rng.normal();
      x0(i) = 3.0 * rng.normal();
    }
    // Non-quadratic convex-ish objective with quartic tails.
    const LbfgsObjective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      g.resize(n);
      double value = 0.0;
      for (int i = 0; i < n; ++i) {
        const double u = x(i) - shift(i);
        value += u * u + 0.1 * u * u * u * u;
        g(i) = 2.0 * u + 0.4 * u * u * u;
      }
      return value;
    };
    Eigen::VectorXd g0(n);
    const double f0 = f(x0, g0);
    LbfgsConfig cfg;
    cfg.max_iterations = 5;  // even truncated runs must not regress
    const auto result = lbfgs_minimize(f, x0, cfg);
    CHECK(result.value <= f0);
  }
}

TEST_CASE("lbfgs returns immediately at a stationary point") {
  const LbfgsObjective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2.0 * x;
    return x.squaredNorm();
  };
  const auto result = lbfgs_minimize(f, Eigen::VectorXd::Zero(4), LbfgsConfig{});
  CHECK(result.iterations == 0);
  CHECK(result.status == LbfgsStatus::kConverged);
}

TEST_CASE("lbfgs raises on non-finite objectives") {
  const LbfgsObjective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = Eigen::VectorXd::Constant(x.size(), std::numeric_limits<double>::quiet_NaN());
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(lbfgs_minimize(f, Eigen::VectorXd::Ones(2), LbfgsConfig{}), std::runtime_error);
}

TEST_CASE("lbfgs validates its configuration") {
  const LbfgsObjective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = x;
    return 0.5 * x.squaredNorm();
  };
  LbfgsConfig bad;
  bad.c1 = 0.95;  // violates c1 < c2
  CHECK_THROWS_AS(lbfgs_minimize(f, Eigen::VectorXd::Ones(2), bad), std::invalid_argument);
}
