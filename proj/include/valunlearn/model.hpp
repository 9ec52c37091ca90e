#pragma once

#include <optional>

#include "valunlearn/dataset.hpp"
#include "valunlearn/loss.hpp"

namespace valunlearn {

/// The regularized empirical risk
///   L(w; D) = (1/n) sum_i loss(w, z_i) + (lambda/2) |w|^2  (+ b.w when perturbed).
struct Objective {
  LossKind loss = LossKind::logistic();
  double lambda = 1e-3;
  /// Objective-perturbation vector b. Drawn once and reused for every retrain.
  std::optional<Vector> perturbation;

  void validate(Index dim) const;
};

/// Trained parameters with the regularized Hessian of the objective at w.
struct ModelState {
  Vector w;
  Matrix H;
  Objective objective;

  double lambda() const { return objective.lambda; }
  const LossKind& loss() const { return objective.loss; }
  const std::optional<Vector>& perturbation() const { return objective.perturbation; }
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double misclassification_cost = 0.0;
};

struct TrainOptions {
  double tolerance = 1e-8;
  int max_iterations = 1000;
  int memory = 10;
};

double objective_value(const Vector& w, const Objective& objective, const Dataset& data);
double loss_value(const ModelState& model, const Dataset& data);

/// grad L(w; data), including lambda*w and b when present.
Vector objective_gradient(const Vector& w, const Objective& objective, const Dataset& data);

/// Gradient of the unregularized per-sample loss.
Vector per_sample_gradient(const Vector& w, const LossKind& loss, const Eigen::Ref<const Vector>& x, double y);
Vector per_sample_gradient(const ModelState& model, const Dataset& data, Index row);

/// Hessian of the unregularized per-sample loss.
Matrix per_sample_hessian(const Vector& w, const LossKind& loss, const Eigen::Ref<const Vector>& x, double y);
Matrix per_sample_hessian(const ModelState& model, const Dataset& data, Index row);

/// (1/n) sum_i Hess loss(w, z_i) + lambda I.
Matrix full_hessian(const Vector& w, const Objective& objective, const Dataset& data);

/// Minimizes L (or L + b.w) from `start` (zero when absent).
/// Throws ConvergenceFailure carrying the final residual if the tolerance is
/// not reached within the iteration cap.
ModelState train(const Dataset& data, const Objective& objective, const TrainOptions& options = {},
                 const std::optional<Vector>& start = std::nullopt);

/// sign(w.x) with ties mapped to +1.
Vector predict(const Vector& w, const Dataset& data);

/// Precision and recall are with respect to class +1 and are 0 when their
/// denominator is empty. Cost is (cost_fp*FP + cost_fn*FN)/n.
Metrics evaluate(const Vector& w, const Dataset& test, double cost_fp = 1.0, double cost_fn = 1.0);

}  // namespace valunlearn
