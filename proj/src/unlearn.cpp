#include "valunlearn/unlearn.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "valunlearn/errors.hpp"

namespace valunlearn {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void check_bound_inputs(double C, double beta, double lambda) {
  if (!(C > 0)) throw InvalidArgument("bound: C must be positive");
  if (!(beta >= 0)) throw InvalidArgument("bound: beta must be nonnegative");
  if (!(lambda > 0)) throw InvalidArgument("bound: lambda must be positive");
}

double remaining_after(double n, double removed) {
  const double left = n - removed;
  if (!(left >= 1.0)) {
    throw BudgetExhausted("budget exhausted: n - removed = " + std::to_string(left) + " < 1");
  }
  return left;
}

void check_round(const CertBudget& budget, long t) {
  if (t < 1 || t > budget.T) {
    throw InvalidArgument("round " + std::to_string(t) + " outside 1.." + std::to_string(budget.T));
  }
}

// (1/m) sum_i c_i x_i + (weight_sum/m)(lambda w + b), with c_i the
// weighted loss derivative of deleted row i.
Vector gradient_from_coefficients(const Vector& w, const Dataset& deleted, const Vector& coefficients,
                                  double weight_sum, const Objective& objective) {
  const double m = static_cast<double>(deleted.size());
  Vector reg = objective.lambda * w;
  if (objective.perturbation) reg += *objective.perturbation;
  Vector acc = deleted.features().transpose() * coefficients;
  acc += weight_sum * reg;
  return acc / m;
}

}  // namespace

CertBudget CertBudget::make(const Objective& objective, double epsilon, double delta, long n, long m, long T) {
  CertBudget b;
  b.epsilon = epsilon;
  b.delta = delta;
  b.C = objective.loss.C;
  b.beta = objective.loss.beta;
  b.lambda = objective.lambda;
  b.n = n;
  b.m = m;
  b.T = T;
  return b;
}

void CertBudget::validate() const {
  if (!(epsilon > 0)) throw InvalidArgument("budget: epsilon must be positive");
  if (!(delta > 0 && delta < 1)) throw InvalidArgument("budget: delta must be in (0, 1)");
  if (m < 1 || T < 1) throw InvalidArgument("budget: m and T must be at least 1");
  check_bound_inputs(C, beta, lambda);
  if (n - T * m <= 0) throw BudgetExhausted("budget: n - T*m must be positive");
}

double gauss_constant(double delta) {
  if (!(delta > 0)) throw InvalidArgument("gauss_constant: delta must be positive");
  if (delta > 1.25) throw InvalidArgument("gauss_constant: delta must not exceed 1.25");
  return std::sqrt(2.0 * std::log(1.25 / delta));
}

double parameter_gap_bound(double C, double beta, double lambda, double n, double removed, double batch) {
  check_bound_inputs(C, beta, lambda);
  const double left = remaining_after(n, removed);
  return 4.0 * beta * C * C * batch * removed / (lambda * lambda * lambda * left * left) +
         4.0 * C * removed / (lambda * left);
}

double residual_bound(double C, double beta, double lambda, double n, double removed, double batch) {
  check_bound_inputs(C, beta, lambda);
  const double left = remaining_after(n, removed);
  return 4.0 * beta * C * C * batch * removed / (lambda * lambda * left * left) + 4.0 * C * removed / left;
}

double zero_weight_residual_bound(double C, double n, double removed) {
  if (!(C > 0)) throw InvalidArgument("bound: C must be positive");
  const double left = remaining_after(n, removed);
  return 2.0 * C * removed / left;
}

double epsilon1_prime(const CertBudget& budget, long t) {
  check_round(budget, t);
  const double m = static_cast<double>(budget.m);
  return parameter_gap_bound(budget.C, budget.beta, budget.lambda, static_cast<double>(budget.n),
                             static_cast<double>(t) * m, m);
}

double epsilon2_prime(const CertBudget& budget) {
  const double m = static_cast<double>(budget.m);
  return residual_bound(budget.C, budget.beta, budget.lambda, static_cast<double>(budget.n),
                        static_cast<double>(budget.T) * m, m);
}

double threshold1(const CertBudget& budget, long t) { return budget.lambda * epsilon1_prime(budget, t); }

double threshold0(const CertBudget& budget, long t) {
  check_round(budget, t);
  return zero_weight_residual_bound(budget.C, static_cast<double>(budget.n),
                                    static_cast<double>(t) * static_cast<double>(budget.m));
}

double output_noise_std(const CertBudget& budget, long t) {
  return gauss_constant(budget.delta) * epsilon1_prime(budget, t) / budget.epsilon;
}

double objective_noise_std(const CertBudget& budget) {
  return gauss_constant(budget.delta) * epsilon2_prime(budget) / budget.epsilon;
}

Vector gaussian_noise(Index dim, double stddev, std::mt19937_64& rng) {
  if (!(stddev >= 0)) throw InvalidArgument("gaussian_noise: stddev must be nonnegative");
  Vector b = Vector::Zero(dim);
  if (stddev == 0.0) return b;
  std::normal_distribution<double> normal(0.0, stddev);
  for (Index i = 0; i < dim; ++i) b(i) = normal(rng);
  return b;
}

Vector output_perturb(const Vector& w, const CertBudget& budget, long t, std::mt19937_64& rng) {
  return w + gaussian_noise(w.size(), output_noise_std(budget, t), rng);
}

Vector output_perturb(const Vector& w, const CertBudget& budget, long t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return output_perturb(w, budget, t, rng);
}

Vector objective_perturb_setup(const CertBudget& budget, Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return gaussian_noise(dim, objective_noise_std(budget), rng);
}

Vector deletion_gradient(const Vector& w, const Dataset& deleted, const Objective& objective) {
  if (deleted.empty()) throw InvalidArgument("deletion_gradient: empty deletion set");
  if (deleted.dim() != w.size()) throw InvalidArgument("deletion_gradient: dimension mismatch");
  const Vector scores = deleted.features() * w;
  Vector coefficients(deleted.size());
  for (Index i = 0; i < deleted.size(); ++i) coefficients(i) = objective.loss.first(scores(i), deleted.label(i));
  return gradient_from_coefficients(w, deleted, coefficients, static_cast<double>(deleted.size()), objective);
}

Vector weighted_gradient(const Vector& w, const Dataset& deleted, const ValueMap& weights,
                         const Objective& objective) {
  if (deleted.empty()) throw InvalidArgument("weighted_gradient: empty deletion set");
  if (deleted.dim() != w.size()) throw InvalidArgument("weighted_gradient: dimension mismatch");
  const Vector scores = deleted.features() * w;
  Vector coefficients(deleted.size());
  double weight_sum = 0.0;
  for (Index i = 0; i < deleted.size(); ++i) {
    auto it = weights.find(deleted.id(i));
    if (it == weights.end()) {
      throw InvalidArgument("weighted_gradient: no weight for id " + std::to_string(deleted.id(i)));
    }
    const double v = it->second;
    coefficients(i) = v == 0.0 ? 0.0 : v * objective.loss.first(scores(i), deleted.label(i));
    weight_sum += v;
  }
  return gradient_from_coefficients(w, deleted, coefficients, weight_sum, objective);
}

Matrix hessian_downdate_counts(const Matrix& H_prev, const Vector& w_prev, const Dataset& deleted, long n_before,
                               const Objective& objective) {
  const long n_after = n_before - static_cast<long>(deleted.size());
  if (n_after < 1) throw BudgetExhausted("hessian_downdate: no points would remain");
  if (H_prev.rows() != w_prev.size() || H_prev.cols() != w_prev.size() || deleted.dim() != w_prev.size()) {
    throw InvalidArgument("hessian_downdate: dimension mismatch");
  }
  const Index d = w_prev.size();
  Matrix removed = Matrix::Zero(d, d);
  if (!deleted.empty()) {
    const Vector scores = deleted.features() * w_prev;
    Vector curvature(deleted.size());
    for (Index i = 0; i < deleted.size(); ++i) curvature(i) = objective.loss.second(scores(i), deleted.label(i));
    const auto& x = deleted.features();
    removed = x.transpose() * curvature.asDiagonal() * x;
    removed = 0.5 * (removed + removed.transpose());
  }
  removed.diagonal().array() += objective.lambda * static_cast<double>(deleted.size());
  Matrix h = static_cast<double>(n_before) * H_prev - removed;
  h /= static_cast<double>(n_after);
  return h;
}

Matrix hessian_downdate(const Matrix& H_prev, const Vector& w_prev, const Dataset& deleted, long n, long m, long t,
                        const Objective& objective) {
  if (static_cast<long>(deleted.size()) != m) throw InvalidArgument("hessian_downdate: |deleted| != m");
  if (n - t * m < 1) throw BudgetExhausted("hessian_downdate: n - t*m < 1");
  return hessian_downdate_counts(H_prev, w_prev, deleted, n - (t - 1) * m, objective);
}

Vector newton_step_counts(const Vector& w_prev, const Matrix& H_t, const Vector& grad, long batch, long n_after,
                          double lambda) {
  if (n_after < 1) throw BudgetExhausted("newton_step: n - t*m < 1");
  if (H_t.rows() != w_prev.size() || H_t.cols() != w_prev.size() || grad.size() != w_prev.size()) {
    throw InvalidArgument("newton_step: dimension mismatch");
  }
  Matrix shifted = H_t;
  shifted.diagonal().array() -= 0.5 * lambda;
  if (Eigen::LLT<Matrix>(shifted).info() != Eigen::Success) {
    throw IllConditionedHessian("newton_step: Hessian minimum eigenvalue below lambda/2");
  }
  Eigen::LLT<Matrix> llt(H_t);
  if (llt.info() != Eigen::Success) throw IllConditionedHessian("newton_step: Cholesky factorization failed");
  const double scale = static_cast<double>(batch) / static_cast<double>(n_after);
  return w_prev + scale * llt.solve(grad);
}

Vector dvwu_newton_step(const Vector& w_prev, const Matrix& H_t, const Vector& grad, long n, long m, long t,
                        double lambda) {
  return newton_step_counts(w_prev, H_t, grad, m, n - t * m, lambda);
}

double gradient_residual(const Vector& w, const Dataset& data, const Objective& objective) {
  return objective_gradient(w, objective, data).norm();
}

NewtonUpdate newton_round(const Vector& w_prev, const Matrix& H_prev, const Dataset& deleted,
                          const ValueMap* weights, long n_before, const Objective& objective) {
  NewtonUpdate out;
  auto start = Clock::now();
  const Vector grad = weights ? weighted_gradient(w_prev, deleted, *weights, objective)
                              : deletion_gradient(w_prev, deleted, objective);
  out.timings.gradient_ms = ms_since(start);

  start = Clock::now();
  out.H = hessian_downdate_counts(H_prev, w_prev, deleted, n_before, objective);
  out.timings.hessian_ms = ms_since(start);

  start = Clock::now();
  const long batch = static_cast<long>(deleted.size());
  out.w = newton_step_counts(w_prev, out.H, grad, batch, n_before - batch, objective.lambda);
  out.timings.solve_ms = ms_since(start);
  return out;
}

RoundOutcome certify_or_retrain(long t, const Vector& w, double threshold, const Dataset& data_t,
                                const Objective& objective, const TrainOptions& options) {
  if (!(threshold > 0)) throw InvalidArgument("certify: threshold must be positive");
  RoundOutcome out;
  out.t = t;
  out.threshold = threshold;
  auto start = Clock::now();
  out.residual_norm = gradient_residual(w, data_t, objective);
  out.elapsed.certify_ms = ms_since(start);
  out.certified = out.residual_norm <= threshold;
  if (out.certified) {
    out.w_internal = w;
    out.post_residual_norm = out.residual_norm;
    return out;
  }
  start = Clock::now();
  ModelState refit = train(data_t, objective, options);
  out.elapsed.retrain_ms = ms_since(start);
  out.retrained = true;
  out.w_internal = refit.w;
  out.post_residual_norm = gradient_residual(refit.w, data_t, objective);
  out.refit = std::move(refit);
  return out;
}

Vector unlearn_newton_unweighted(const Vector& w_star, const Matrix& H, const Dataset& deleted, long n,
                                 const Objective& objective) {
  return newton_round(w_star, H, deleted, nullptr, n, objective).w;
}

InfluenceFactor::InfluenceFactor(const Matrix& H0) : llt_(H0) {
  if (llt_.info() != Eigen::Success) throw IllConditionedHessian("influence: full-data Hessian is not positive definite");
}

Vector unlearn_influence(const Vector& w, const InfluenceFactor& factor, const Dataset& deleted, long n,
                         const Objective& objective) {
  const long m = static_cast<long>(deleted.size());
  if (n - m < 1) throw BudgetExhausted("influence: no points would remain");
  const Vector grad = deletion_gradient(w, deleted, objective);
  return w + (static_cast<double>(m) / static_cast<double>(n - m)) * factor.solve(grad);
}

Vector unlearn_gradient_ascent(Vector w, const Dataset& deleted, const ValueMap* weights, double eta, long steps,
                               const Objective& objective) {
  if (!(eta > 0)) throw InvalidArgument("gradient_ascent: eta must be positive");
  if (steps < 1) throw InvalidArgument("gradient_ascent: steps must be at least 1");
  for (long s = 0; s < steps; ++s) {
    const Vector grad = weights ? weighted_gradient(w, deleted, *weights, objective)
                                : deletion_gradient(w, deleted, objective);
    w += eta * grad;
  }
  return w;
}

}  // namespace valunlearn
