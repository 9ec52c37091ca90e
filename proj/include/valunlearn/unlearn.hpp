#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "valunlearn/dataset.hpp"
#include "valunlearn/model.hpp"
#include "valunlearn/valuation.hpp"

namespace valunlearn {

/// Privacy budget and problem sizes for (epsilon, delta)-certified removal
/// over T rounds of m deletions from an initial set of n points.
struct CertBudget {
  double epsilon = 1.0;
  double delta = 1e-4;
  double C = 1.0;
  double beta = 0.1;
  double lambda = 1e-3;
  long n = 0;
  long m = 0;
  long T = 1;

  static CertBudget make(const Objective& objective, double epsilon, double delta, long n, long m, long T);
  void validate() const;
};

/// sqrt(2 ln(1.25 / delta)).
double gauss_constant(double delta);

// Bounds after `removed` points have been deleted in batches of at most
// `batch` points. With uniform batches removed = t*m and batch = m.

/// 4 beta C^2 batch removed / (lambda^3 (n-removed)^2) + 4 C removed / (lambda (n-removed)).
double parameter_gap_bound(double C, double beta, double lambda, double n, double removed, double batch);
/// lambda * parameter_gap_bound: the gradient residual bound.
double residual_bound(double C, double beta, double lambda, double n, double removed, double batch);
/// 2 C removed / (n - removed): the residual bound when every weight is zero.
double zero_weight_residual_bound(double C, double n, double removed);

/// epsilon_1' at round t (parameter-gap bound).
double epsilon1_prime(const CertBudget& budget, long t);
/// epsilon_2' (residual bound at t = T), used for objective perturbation.
double epsilon2_prime(const CertBudget& budget);
/// Threshold 1 for output perturbation: lambda * epsilon1_prime(t).
double threshold1(const CertBudget& budget, long t);
/// Threshold 0 for output perturbation: 2 C m t / (n - t m).
double threshold0(const CertBudget& budget, long t);

double output_noise_std(const CertBudget& budget, long t);
double objective_noise_std(const CertBudget& budget);

/// I.i.d. N(0, stddev^2) coordinates; zero vector when stddev is 0.
Vector gaussian_noise(Index dim, double stddev, std::mt19937_64& rng);

/// w + b with b ~ N(0, (c eps1'(t) / eps)^2 I). `w` itself is untouched.
Vector output_perturb(const Vector& w, const CertBudget& budget, long t, std::mt19937_64& rng);
Vector output_perturb(const Vector& w, const CertBudget& budget, long t, std::uint64_t seed);

/// b ~ N(0, (c eps2' / eps)^2 I), drawn once before initial training.
Vector objective_perturb_setup(const CertBudget& budget, Index dim, std::uint64_t seed);

/// (1/m) sum_i (grad loss(w, z_i) + lambda w (+ b)) over the deleted set.
Vector deletion_gradient(const Vector& w, const Dataset& deleted, const Objective& objective);

/// (1/m) sum_i v_i (grad loss(w, z_i) + lambda w (+ b)). Zero-weight
/// points contribute nothing; every deleted id must have a weight.
Vector weighted_gradient(const Vector& w, const Dataset& deleted, const ValueMap& weights,
                         const Objective& objective);

/// Removes the deleted points' contribution from the running Hessian:
///   H_t = ((n_before) H_prev - sum_i (Hess loss(w_prev, z_i) + lambda I)) / n_after
/// with n_after = n_before - |deleted|. Applies to every deleted point
/// regardless of its weight.
Matrix hessian_downdate_counts(const Matrix& H_prev, const Vector& w_prev, const Dataset& deleted, long n_before,
                               const Objective& objective);
/// Uniform-batch form: n_before = n - (t-1) m, n_after = n - t m.
Matrix hessian_downdate(const Matrix& H_prev, const Vector& w_prev, const Dataset& deleted, long n, long m, long t,
                        const Objective& objective);

/// w_prev + (batch / n_after) H_t^{-1} grad. Throws IllConditionedHessian
/// when H_t - (lambda/2) I is not positive definite.
Vector newton_step_counts(const Vector& w_prev, const Matrix& H_t, const Vector& grad, long batch, long n_after,
                          double lambda);
Vector dvwu_newton_step(const Vector& w_prev, const Matrix& H_t, const Vector& grad, long n, long m, long t,
                        double lambda);

/// |grad L(w; data) (+ b)|_2.
double gradient_residual(const Vector& w, const Dataset& data, const Objective& objective);

struct PhaseTimings {
  double gradient_ms = 0.0;
  double hessian_ms = 0.0;
  double solve_ms = 0.0;
  double valuation_ms = 0.0;
  double certify_ms = 0.0;
  double retrain_ms = 0.0;

  double total_ms() const {
    return gradient_ms + hessian_ms + solve_ms + valuation_ms + certify_ms + retrain_ms;
  }
};

struct NewtonUpdate {
  Vector w;
  Matrix H;
  PhaseTimings timings;
};

/// One continuous-deletion round of the one-step Newton update. With
/// `weights` the gradient is value-weighted; without, it is the plain
/// deletion gradient.
NewtonUpdate newton_round(const Vector& w_prev, const Matrix& H_prev, const Dataset& deleted,
                          const ValueMap* weights, long n_before, const Objective& objective);

struct RoundOutcome {
  long t = 0;
  Vector w_internal;
  std::optional<Vector> w_published;
  /// Residual of the unlearned parameters (before any retrain).
  double residual_norm = 0.0;
  /// Residual after the fallback retrain; equals residual_norm otherwise.
  double post_residual_norm = 0.0;
  double threshold = 0.0;
  bool certified = false;
  bool retrained = false;
  /// Present when `retrained`: the refit model with its Hessian on D^t.
  std::optional<ModelState> refit;
  PhaseTimings elapsed;
};

/// Keeps `w` when its residual on `data_t` is within `threshold`; otherwise
/// retrains on data_t (minimizing L + b.w when the objective is perturbed).
RoundOutcome certify_or_retrain(long t, const Vector& w, double threshold, const Dataset& data_t,
                                const Objective& objective, const TrainOptions& options = {});

/// w* + (m/(n-m)) H_{D\M}^{-1} grad L(w*; M), with H_{D\M} downdated from the
/// full-data Hessian H. m = |deleted|.
Vector unlearn_newton_unweighted(const Vector& w_star, const Matrix& H, const Dataset& deleted, long n,
                                 const Objective& objective);

/// Cached Cholesky factor of the full-data Hessian used by the influence baseline.
class InfluenceFactor {
 public:
  explicit InfluenceFactor(const Matrix& H0);
  Vector solve(const Vector& rhs) const { return llt_.solve(rhs); }

 private:
  Eigen::LLT<Matrix> llt_;
};

/// w + (m/(n-m)) H0^{-1} grad L(w; M), reusing the full-data factorization.
/// `n` is the number of points before this deletion.
Vector unlearn_influence(const Vector& w, const InfluenceFactor& factor, const Dataset& deleted, long n,
                         const Objective& objective);

/// `steps` iterations of w <- w + eta (1/m) sum_i v_i (grad loss + lambda w).
/// Without weights every v_i is 1.
Vector unlearn_gradient_ascent(Vector w, const Dataset& deleted, const ValueMap* weights, double eta, long steps,
                               const Objective& objective);

}  // namespace valunlearn
