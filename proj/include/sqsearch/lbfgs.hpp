#pragma once

#include <Eigen/Dense>

#include <functional>

namespace sqsearch {

struct LbfgsConfig {
  int max_iterations = 100;
  int memory = 10;                    // history pairs
  double gradient_tolerance = 1e-5;   // on ||grad||_2
  double c1 = 1e-4;                   // sufficient-decrease (strong Wolfe)
  double c2 = 0.9;                    // curvature (strong Wolfe)
};

enum class LbfgsStatus { kConverged, kMaxIterations, kLineSearchFailed };

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  LbfgsStatus status = LbfgsStatus::kMaxIterations;
};

/// Objective callback: fills `grad` and returns the value at `x`.
using LbfgsObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Limited-memory BFGS with a strong-Wolfe line search. The returned value
/// never exceeds f(x0); a non-finite value or gradient raises an error
/// carrying the offending point.
LbfgsResult lbfgs_minimize(const LbfgsObjective& f, Eigen::VectorXd x0, const LbfgsConfig& cfg);

}  // namespace sqsearch
