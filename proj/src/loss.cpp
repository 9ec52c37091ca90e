#include "valunlearn/loss.hpp"

#include <cmath>

#include "valunlearn/errors.hpp"

namespace valunlearn {
namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

LossKind LossKind::logistic(double C, double beta) { return {LossType::Logistic, 2.0, C, beta}; }

LossKind LossKind::huberized_svm(double gamma, double C, double beta) {
  return {LossType::HuberizedSvm, gamma, C, beta};
}

LossKind LossKind::squared(double C, double beta) { return {LossType::Squared, 2.0, C, beta}; }

LossKind LossKind::parse(std::string_view name) {
  if (name == "logistic" || name == "lr") return logistic();
  if (name == "huber-svm" || name == "svm" || name == "huberized-svm") return huberized_svm();
  if (name == "squared") return squared();
  throw InvalidArgument("unknown loss '" + std::string(name) + "'");
}

std::string LossKind::name() const {
  switch (type) {
    case LossType::Logistic: return "logistic";
    case LossType::HuberizedSvm: return "huber-svm";
    case LossType::Squared: return "squared";
  }
  return "?";
}

void LossKind::validate() const {
  if (!(gamma > 0)) throw InvalidArgument("loss: gamma must be positive");
  if (!(C > 0)) throw InvalidArgument("loss: C must be positive");
  if (!(beta >= 0)) throw InvalidArgument("loss: beta must be nonnegative");
}

double LossKind::value(double s, double y) const {
  switch (type) {
    case LossType::Logistic: return softplus(-y * s);
    case LossType::HuberizedSvm: {
      const double u = y * s;
      if (u > 1.0) return 0.0;
      if (u > 1.0 - gamma) return (1.0 - u) * (1.0 - u) / (2.0 * gamma);
      return 1.0 - u - gamma / 2.0;
    }
    case LossType::Squared: return 0.5 * (s - y) * (s - y);
  }
  return 0.0;
}

double LossKind::first(double s, double y) const {
  switch (type) {
    case LossType::Logistic: return -y * sigmoid(-y * s);
    case LossType::HuberizedSvm: {
      const double u = y * s;
      if (u > 1.0) return 0.0;
      if (u > 1.0 - gamma) return -y * (1.0 - u) / gamma;
      return -y;
    }
    case LossType::Squared: return s - y;
  }
  return 0.0;
}

double LossKind::second(double s, double y) const {
  switch (type) {
    case LossType::Logistic: {
      const double p = sigmoid(y * s);
      return p * (1.0 - p);
    }
    case LossType::HuberizedSvm: {
      const double u = y * s;
      return (u > 1.0 - gamma && u <= 1.0) ? 1.0 / gamma : 0.0;
    }
    case LossType::Squared: return 1.0;
  }
  return 0.0;
}

}  // namespace valunlearn
