#include "valunlearn/optimizer.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace valunlearn {
namespace {

struct Pair {
  Vector s;
  Vector y;
  double rho;
};

// Two-loop recursion: returns -H_k g.
Vector lbfgs_direction(const std::deque<Pair>& memory, const Vector& g) {
  Vector q = g;
  std::vector<double> alpha(memory.size());
  for (std::size_t i = memory.size(); i-- > 0;) {
    alpha[i] = memory[i].rho * memory[i].s.dot(q);
    q -= alpha[i] * memory[i].y;
  }
  if (!memory.empty()) {
    const Pair& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const double b = memory[i].rho * memory[i].y.dot(q);
    q += (alpha[i] - b) * memory[i].s;
  }
  return -q;
}

}  // namespace

LbfgsResult minimize_lbfgs(const ValueAndGradient& fg, Vector x0, const LbfgsOptions& options) {
  LbfgsResult result;
  result.x = std::move(x0);
  Vector g(result.x.size());
  double f = fg(result.x, g);
  double gnorm = g.norm();

  std::deque<Pair> memory;
  Vector x_new(result.x.size());
  Vector g_new(result.x.size());
  const double noise = 8.0 * std::numeric_limits<double>::epsilon();

  int iter = 0;
  for (; iter < options.max_iterations && gnorm > options.tolerance; ++iter) {
    Vector d = lbfgs_direction(memory, g);
    double slope = g.dot(d);
    if (!(slope < 0)) {
      memory.clear();
      d = -g;
      slope = -gnorm * gnorm;
    }
    // Unit step for quasi-Newton directions; scaled steepest descent otherwise.
    double step = memory.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;

    bool accepted = false;
    double f_new = f;
    for (int k = 0; k < options.max_backtracks; ++k) {
      x_new = result.x + step * d;
      f_new = fg(x_new, g_new);
      if (std::isfinite(f_new)) {
        if (f_new <= f + options.armijo * step * slope) {
          accepted = true;
          break;
        }
        // Near the optimum the decrease drops below rounding noise in f;
        // fall back to requiring a smaller gradient.
        if (std::abs(f_new - f) <= noise * std::max(1.0, std::abs(f)) && g_new.norm() < gnorm) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (memory.empty()) break;
      memory.clear();
      continue;
    }

    Vector s = x_new - result.x;
    Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      memory.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
    }
    result.x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    gnorm = g.norm();
  }

  result.value = f;
  result.gradient_norm = gnorm;
  result.iterations = iter;
  result.converged = gnorm <= options.tolerance;
  return result;
}

}  // namespace valunlearn
