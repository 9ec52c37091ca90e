#pragma once

#include <functional>

#include "valunlearn/dataset.hpp"

namespace valunlearn {

struct LbfgsOptions {
  int memory = 10;
  int max_iterations = 1000;
  /// Stop when the gradient 2-norm is at or below this.
  double tolerance = 1e-8;
  double armijo = 1e-4;
  int max_backtracks = 60;
};

struct LbfgsResult {
  Vector x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Evaluates f(x) and writes grad f(x) into the second argument.
using ValueAndGradient = std::function<double(const Vector&, Vector&)>;

/// Limited-memory BFGS with a backtracking Armijo line search.
///
/// Deterministic. Never throws on non-convergence; callers inspect
/// `converged`.
LbfgsResult minimize_lbfgs(const ValueAndGradient& fg, Vector x0, const LbfgsOptions& options = {});

}  // namespace valunlearn
