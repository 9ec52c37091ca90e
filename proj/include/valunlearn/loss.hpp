#pragma once

#include <string>
#include <string_view>

namespace valunlearn {

enum class LossType { Logistic, HuberizedSvm, Squared };

/// Per-sample convex loss together with the constants the certification
/// bounds need: C bounds the per-sample gradient norm, beta is the Lipschitz
/// constant of the per-sample Hessian.
///
/// All three losses are written as functions of the score s = w.x and the
/// label y, so per-sample gradients are first(s, y) * x and per-sample
/// Hessians are second(s, y) * x x^T.
///
/// Logistic:      log(1 + exp(-y s)).
/// HuberizedSvm:  with u = y s, 0 for u > 1, (1-u)^2 / (2 gamma) for
///                1-gamma < u <= 1, and 1 - u - gamma/2 below that.
/// Squared:       (s - y)^2 / 2. Quadratic surrogate, used to check that the
///                one-step Newton update is exact on quadratics.
struct LossKind {
  LossType type = LossType::Logistic;
  double gamma = 2.0;
  double C = 1.0;
  double beta = 0.1;

  static LossKind logistic(double C = 1.0, double beta = 0.1);
  static LossKind huberized_svm(double gamma = 2.0, double C = 1.0, double beta = 0.5);
  static LossKind squared(double C = 1.0, double beta = 0.0);

  /// Accepts "logistic"/"lr", "huber-svm"/"svm", "squared".
  static LossKind parse(std::string_view name);
  std::string name() const;

  void validate() const;

  double value(double score, double y) const;
  double first(double score, double y) const;
  double second(double score, double y) const;
};

}  // namespace valunlearn
