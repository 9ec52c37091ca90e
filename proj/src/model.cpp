#include "valunlearn/model.hpp"

#include <cmath>
#include <string>

#include "valunlearn/errors.hpp"
#include "valunlearn/optimizer.hpp"

namespace valunlearn {
namespace {

void require_nonempty(const Dataset& data, const char* where) {
  if (data.empty()) throw InvalidArgument(std::string(where) + ": empty dataset");
}

void require_dim(Index expected, Index got, const char* where) {
  if (expected != got) {
    throw InvalidArgument(std::string(where) + ": dimension mismatch (" + std::to_string(expected) + " vs " +
                          std::to_string(got) + ")");
  }
}

}  // namespace

void Objective::validate(Index dim) const {
  loss.validate();
  if (!(lambda > 0)) throw InvalidArgument("objective: lambda must be positive");
  if (perturbation) require_dim(dim, perturbation->size(), "objective perturbation");
}

double objective_value(const Vector& w, const Objective& objective, const Dataset& data) {
  require_nonempty(data, "loss_value");
  require_dim(data.dim(), w.size(), "loss_value");
  const Vector scores = data.features() * w;
  double sum = 0.0;
  for (Index i = 0; i < data.size(); ++i) sum += objective.loss.value(scores(i), data.label(i));
  double value = sum / static_cast<double>(data.size()) + 0.5 * objective.lambda * w.squaredNorm();
  if (objective.perturbation) value += objective.perturbation->dot(w);
  return value;
}

double loss_value(const ModelState& model, const Dataset& data) {
  return objective_value(model.w, model.objective, data);
}

Vector objective_gradient(const Vector& w, const Objective& objective, const Dataset& data) {
  require_nonempty(data, "gradient");
  require_dim(data.dim(), w.size(), "gradient");
  const Vector scores = data.features() * w;
  Vector coef(data.size());
  for (Index i = 0; i < data.size(); ++i) coef(i) = objective.loss.first(scores(i), data.label(i));
  Vector g = data.features().transpose() * coef;
  g /= static_cast<double>(data.size());
  g += objective.lambda * w;
  if (objective.perturbation) g += *objective.perturbation;
  return g;
}

Vector per_sample_gradient(const Vector& w, const LossKind& loss, const Eigen::Ref<const Vector>& x, double y) {
  require_dim(w.size(), x.size(), "per_sample_gradient");
  return loss.first(w.dot(x), y) * x;
}

Vector per_sample_gradient(const ModelState& model, const Dataset& data, Index row) {
  return per_sample_gradient(model.w, model.loss(), data.row(row).transpose(), data.label(row));
}

Matrix per_sample_hessian(const Vector& w, const LossKind& loss, const Eigen::Ref<const Vector>& x, double y) {
  require_dim(w.size(), x.size(), "per_sample_hessian");
  return loss.second(w.dot(x), y) * (x * x.transpose());
}

Matrix per_sample_hessian(const ModelState& model, const Dataset& data, Index row) {
  return per_sample_hessian(model.w, model.loss(), data.row(row).transpose(), data.label(row));
}

Matrix full_hessian(const Vector& w, const Objective& objective, const Dataset& data) {
  require_nonempty(data, "full_hessian");
  require_dim(data.dim(), w.size(), "full_hessian");
  const Vector scores = data.features() * w;
  Vector curvature(data.size());
  for (Index i = 0; i < data.size(); ++i) curvature(i) = objective.loss.second(scores(i), data.label(i));
  const auto& x = data.features();
  Matrix h = x.transpose() * curvature.asDiagonal() * x;
  h /= static_cast<double>(data.size());
  h.diagonal().array() += objective.lambda;
  // Exact symmetry for downstream recursions.
  return 0.5 * (h + h.transpose());
}

ModelState train(const Dataset& data, const Objective& objective, const TrainOptions& options,
                 const std::optional<Vector>& start) {
  require_nonempty(data, "train");
  objective.validate(data.dim());
  if (!(options.tolerance > 0)) throw InvalidArgument("train: tolerance must be positive");

  Vector x0 = start ? *start : Vector::Zero(data.dim());
  require_dim(data.dim(), x0.size(), "train start");

  const auto fg = [&](const Vector& w, Vector& grad) {
    grad = objective_gradient(w, objective, data);
    return objective_value(w, objective, data);
  };
  LbfgsOptions lbfgs;
  lbfgs.tolerance = options.tolerance;
  lbfgs.max_iterations = options.max_iterations;
  lbfgs.memory = options.memory;
  LbfgsResult result = minimize_lbfgs(fg, std::move(x0), lbfgs);
  if (!result.converged) {
    throw ConvergenceFailure("train: gradient norm " + std::to_string(result.gradient_norm) +
                                 " above tolerance after " + std::to_string(result.iterations) + " iterations",
                             result.gradient_norm, result.iterations);
  }
  ModelState model;
  model.w = std::move(result.x);
  model.H = full_hessian(model.w, objective, data);
  model.objective = objective;
  return model;
}

Vector predict(const Vector& w, const Dataset& data) {
  require_dim(data.dim(), w.size(), "predict");
  const Vector scores = data.features() * w;
  return scores.unaryExpr([](double s) { return s >= 0.0 ? 1.0 : -1.0; });
}

Metrics evaluate(const Vector& w, const Dataset& test, double cost_fp, double cost_fn) {
  require_nonempty(test, "evaluate");
  if (cost_fp < 0 || cost_fn < 0) throw InvalidArgument("evaluate: costs must be nonnegative");
  const Vector pred = predict(w, test);
  long tp = 0, fp = 0, fn = 0, tn = 0;
  for (Index i = 0; i < test.size(); ++i) {
    const bool p = pred(i) > 0;
    const bool a = test.label(i) > 0;
    if (p && a) ++tp;
    else if (p && !a) ++fp;
    else if (!p && a) ++fn;
    else ++tn;
  }
  const double n = static_cast<double>(test.size());
  Metrics m;
  m.accuracy = static_cast<double>(tp + tn) / n;
  m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.misclassification_cost = (cost_fp * static_cast<double>(fp) + cost_fn * static_cast<double>(fn)) / n;
  return m;
}

}  // namespace valunlearn
