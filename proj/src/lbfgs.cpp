#include "sqsearch/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace sqsearch {

namespace {

void check_finite(double value, const Eigen::VectorXd& grad, const Eigen::VectorXd& x) {
  if (!std::isfinite(value)) {
    throw std::runtime_error("lbfgs_minimize: objective is non-finite at ||x|| = " +
                             std::to_string(x.norm()));
  }
  for (std::int64_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad(i))) {
      throw std::runtime_error("lbfgs_minimize: gradient coordinate " + std::to_string(i) +
                               " is non-finite at ||x|| = " + std::to_string(x.norm()));
    }
  }
}

struct HistoryPair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho = 0.0;
};

// Two-loop recursion: applies the implicit inverse-Hessian estimate.
Eigen::VectorXd apply_inverse_hessian(const std::deque<HistoryPair>& history,
                                      const Eigen::VectorXd& grad) {
  Eigen::VectorXd q = grad;
  std::vector<double> alpha(history.size(), 0.0);
  for (std::size_t i = history.size(); i-- > 0;) {
    alpha[i] = history[i].rho * history[i].s.dot(q);
    q -= alpha[i] * history[i].y;
  }
  if (!history.empty()) {
    const auto& last = history.back();
    const double scale = last.s.dot(last.y) / last.y.squaredNorm();
    q *= scale;
  }
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double beta = history[i].rho * history[i].y.dot(q);
    q += (alpha[i] - beta) * history[i].s;
  }
  return q;
}

struct LineSearchState {
  double step = 0.0;
  double value = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd grad;
  bool ok = false;
};

/// Strong-Wolfe line search (bracket + zoom). phi(a) = f(x0 + a*p).
LineSearchState line_search(const LbfgsObjective& f, const Eigen::VectorXd& x0, double f0,
                            const Eigen::VectorXd& g0, const Eigen::VectorXd& p, double step0,
                            double c1, double c2) {
  constexpr int kMaxEvals = 50;
  const double d0 = g0.dot(p);  // must be negative

  LineSearchState state;
  state.x.resizeLike(x0);
  state.grad.resizeLike(x0);

  auto eval = [&](double a, double& value, double& deriv, Eigen::VectorXd& x,
                  Eigen::VectorXd& grad) {
    x = x0 + a * p;
    value = f(x, grad);
    check_finite(value, grad, x);
    deriv = grad.dot(p);
  };

  double lo = 0.0, lo_value = f0;
  double hi = 0.0;
  bool bracketed = false;

  double a = step0, prev_a = 0.0, prev_value = f0;
  int evals = 0;

  Eigen::VectorXd x_trial(x0.size()), g_trial(x0.size());
  double value = 0.0, deriv = 0.0;

  // Bracketing phase.
  while (!bracketed && evals < kMaxEvals) {
    eval(a, value, deriv, x_trial, g_trial);
    ++evals;
    if (value > f0 + c1 * a * d0 || (evals > 1 && value >= prev_value)) {
      lo = prev_a;
      lo_value = prev_value;
      hi = a;
      bracketed = true;
      break;
    }
    if (std::abs(deriv) <= -c2 * d0) {
      state.step = a;
      state.value = value;
      state.x = x_trial;
      state.grad = g_trial;
      state.ok = true;
      return state;
    }
    if (deriv >= 0.0) {
      lo = a;
      lo_value = value;
      hi = prev_a;
      bracketed = true;
      break;
    }
    prev_a = a;
    prev_value = value;
    a *= 2.0;
    if (a > 1e20) break;
  }
  if (!bracketed) return state;

  // Zoom phase: bisection inside the bracket.
  for (; evals < kMaxEvals; ++evals) {
    a = 0.5 * (lo + hi);
    if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
    eval(a, value, deriv, x_trial, g_trial);
    if (value > f0 + c1 * a * d0 || value >= lo_value) {
      hi = a;
    } else {
      if (std::abs(deriv) <= -c2 * d0) {
        state.step = a;
        state.value = value;
        state.x = x_trial;
        state.grad = g_trial;
        state.ok = true;
        return state;
      }
      if (deriv * (hi - lo) >= 0.0) {
        hi = lo;
      }
      lo = a;
      lo_value = value;
    }
  }

  // Bracket collapsed without satisfying the curvature condition; accept the
  // best sufficient-decrease point if one was found.
  if (lo > 0.0 && lo_value < f0) {
    eval(lo, value, deriv, x_trial, g_trial);
    state.step = lo;
    state.value = value;
    state.x = x_trial;
    state.grad = g_trial;
    state.ok = true;
  }
  return state;
}

}  // namespace

LbfgsResult lbfgs_minimize(const LbfgsObjective& f, Eigen::VectorXd x0, const LbfgsConfig& cfg) {
  if (cfg.max_iterations < 1) throw std::invalid_argument("lbfgs: max_iterations must be >= 1");
  if (cfg.memory < 1) throw std::invalid_argument("lbfgs: memory must be >= 1");
  if (!(cfg.c1 > 0.0 && cfg.c1 < cfg.c2 && cfg.c2 < 1.0)) {
    throw std::invalid_argument("lbfgs: need 0 < c1 < c2 < 1");
  }
  if (cfg.gradient_tolerance <= 0.0) {
    throw std::invalid_argument("lbfgs: gradient_tolerance must be positive");
  }

  LbfgsResult result;
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd grad(x.size());
  double value = f(x, grad);
  check_finite(value, grad, x);

  result.x = x;
  result.value = value;
  result.iterations = 0;

  if (grad.norm() <= cfg.gradient_tolerance) {
    result.status = LbfgsStatus::kConverged;
    return result;
  }

  std::deque<HistoryPair> history;
  result.status = LbfgsStatus::kMaxIterations;

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    Eigen::VectorXd direction = -apply_inverse_hessian(history, grad);
    if (direction.dot(grad) >= 0.0) {
      // Curvature information went bad; restart from steepest descent.
      history.clear();
      direction = -grad;
    }
    const double step0 =
        history.empty() ? std::min(1.0, 1.0 / std::max(1.0, grad.norm())) : 1.0;

    const auto ls = line_search(f, x, value, grad, direction, step0, cfg.c1, cfg.c2);
    if (!ls.ok) {
      result.status = LbfgsStatus::kLineSearchFailed;
      break;
    }

    Eigen::VectorXd s = ls.x - x;
    Eigen::VectorXd y = ls.grad - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      history.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(history.size()) > cfg.memory) history.pop_front();
    }

    x = ls.x;
    grad = ls.grad;
    value = ls.value;
    result.iterations = iter;
    if (value < result.value) {
      result.x = x;
      result.value = value;
    }
    if (grad.norm() <= cfg.gradient_tolerance) {
      result.status = LbfgsStatus::kConverged;
      break;
    }
  }
  return result;
}

}  // namespace sqsearch
