#include "valunlearn/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include "valunlearn/errors.hpp"

namespace valunlearn {

void ValuationMethod::validate() const {
  if (k < 1) throw InvalidArgument("valuation: k must be at least 1");
}

double min_positive_value(const ValueMap& q, double zero_tol) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [id, value] : q) {
    if (value > zero_tol) best = std::min(best, value);
  }
  return std::isfinite(best) ? best : 1.0;
}

double weight_from_value(double q, double q_min_plus, double alpha, double zero_tol) {
  if (!(q_min_plus > 0)) throw InvalidArgument("weights: q_min_plus must be positive");
  if (!(alpha > 0 && alpha <= 1)) throw InvalidArgument("weights: alpha must be in (0, 1]");
  if (!(zero_tol >= 0)) throw InvalidArgument("weights: zero_tol must be nonnegative");
  if (q < -zero_tol) return 1.0;
  if (q <= zero_tol) return 0.0;
  // Clamped: later-round values can fall below the round-1 minimum.
  return std::min(1.0, alpha * q_min_plus / q);
}

ValueMap weights_from_values(const ValueMap& q, double q_min_plus, double alpha, double zero_tol) {
  ValueMap v;
  v.reserve(q.size());
  for (const auto& [id, value] : q) v.emplace(id, weight_from_value(value, q_min_plus, alpha, zero_tol));
  return v;
}

ValueProfile make_profile(ValueMap q, double alpha, double zero_tol) {
  ValueProfile p;
  p.q_min_plus = min_positive_value(q, zero_tol);
  p.alpha = alpha;
  p.zero_tol = zero_tol;
  p.v = weights_from_values(q, p.q_min_plus, alpha, zero_tol);
  p.q = std::move(q);
  return p;
}

ValueProfile refresh_profile(const ValueProfile& base, ValueMap q) {
  ValueProfile p;
  p.q_min_plus = base.q_min_plus;
  p.alpha = base.alpha;
  p.zero_tol = base.zero_tol;
  p.v = weights_from_values(q, p.q_min_plus, p.alpha, p.zero_tol);
  p.q = std::move(q);
  return p;
}

ValueMap loo_values(const Dataset& train, const Dataset& validation, const Objective& objective,
                    const TrainOptions& options) {
  if (train.size() < 2) throw InvalidArgument("loo_values: need at least two training points");
  if (validation.empty()) throw InvalidArgument("loo_values: empty validation set");
  const double base = evaluate(valunlearn::train(train, objective, options).w, validation).accuracy;
  ValueMap q;
  for (Index i = 0; i < train.size(); ++i) {
    const PointId id = train.id(i);
    const Dataset reduced = train.without(std::span<const PointId>(&id, 1));
    const double acc = evaluate(valunlearn::train(reduced, objective, options).w, validation).accuracy;
    q.emplace(id, base - acc);
  }
  return q;
}

Vector knn_sv_single(const Dataset& train, const Eigen::Ref<const Vector>& x_test, double y_test, int k) {
  if (train.empty()) throw InvalidArgument("knn_sv: empty training set");
  if (k < 1) throw InvalidArgument("knn_sv: k must be at least 1");
  if (x_test.size() != train.dim()) throw InvalidArgument("knn_sv: dimension mismatch");

  const Index n = train.size();
  const Vector dist = (train.features().rowwise() - x_test.transpose()).rowwise().squaredNorm();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (dist(a) != dist(b)) return dist(a) < dist(b);
    return train.id(a) < train.id(b);
  });

  const auto match = [&](Index rank) { return train.label(order[static_cast<std::size_t>(rank)]) == y_test ? 1.0 : 0.0; };
  const double kk = static_cast<double>(k);
  Vector s(n);
  // Farthest point first. The base term is 1/N when N >= k and 1/k otherwise.
  double current = match(n - 1) / std::max(static_cast<double>(n), kk);
  s(order.back()) = current;
  for (Index j = n - 1; j >= 1; --j) {
    // rank j (1-based) is order[j - 1]
    const double jj = static_cast<double>(j);
    current += (match(j - 1) - match(j)) / kk * std::min(kk, jj) / jj;
    s(order[static_cast<std::size_t>(j - 1)]) = current;
  }
  return s;
}

ValueMap knn_sv(const Dataset& train, const Dataset& test, int k) {
  if (test.empty()) throw InvalidArgument("knn_sv: empty test set");
  if (test.dim() != train.dim()) throw InvalidArgument("knn_sv: dimension mismatch");
  Vector total = Vector::Zero(train.size());
  for (Index t = 0; t < test.size(); ++t) {
    total += knn_sv_single(train, test.row(t).transpose(), test.label(t), k);
  }
  total /= static_cast<double>(test.size());
  ValueMap q;
  q.reserve(static_cast<std::size_t>(train.size()));
  for (Index i = 0; i < train.size(); ++i) q.emplace(train.id(i), total(i));
  return q;
}

ValueMap compute_values(const ValuationMethod& method, const Dataset& train, const Dataset& utility,
                        const Objective& objective, const TrainOptions& options) {
  method.validate();
  switch (method.kind) {
    case ValuationKind::KnnShapley: return knn_sv(train, utility, method.k);
    case ValuationKind::LeaveOneOut: return loo_values(train, utility, objective, options);
  }
  return {};
}

ValueProfile dynamic_update(const ValueProfile& profile, const Dataset& remaining, const Dataset& utility,
                            const ValuationMethod& method, const Objective& objective,
                            const TrainOptions& options) {
  if (remaining.empty()) throw InvalidArgument("dynamic_update: no remaining points");
  if (method.mode == ValuationMode::Dynamic) {
    return refresh_profile(profile, compute_values(method, remaining, utility, objective, options));
  }
  ValueMap q;
  for (PointId id : remaining.ids()) {
    auto it = profile.q.find(id);
    if (it == profile.q.end()) throw InvalidArgument("dynamic_update: no value for id " + std::to_string(id));
    q.emplace(id, it->second);
  }
  return refresh_profile(profile, std::move(q));
}

ValuationKind parse_valuation_kind(std::string_view name) {
  if (name == "knn-sv" || name == "knn") return ValuationKind::KnnShapley;
  if (name == "loo" || name == "leave-one-out") return ValuationKind::LeaveOneOut;
  throw InvalidArgument("unknown valuation method '" + std::string(name) + "'");
}

void write_profile_csv(const ValueProfile& profile, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "id,q,v\n";
  std::vector<PointId> ids;
  ids.reserve(profile.q.size());
  for (const auto& entry : profile.q) ids.push_back(entry.first);
  std::sort(ids.begin(), ids.end());
  for (PointId id : ids) {
    auto it = profile.v.find(id);
    out << id << ',' << profile.q.at(id) << ',' << (it == profile.v.end() ? 0.0 : it->second) << '\n';
  }
  if (!out) throw LoadError("write failed for " + path.string());
}

}  // namespace valunlearn
