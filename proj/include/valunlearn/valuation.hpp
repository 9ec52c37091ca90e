#pragma once

#include <filesystem>
#include <unordered_map>
#include <string_view>

#include "valunlearn/dataset.hpp"
#include "valunlearn/model.hpp"

namespace valunlearn {

using ValueMap = std::unordered_map<PointId, double>;

enum class ValuationKind { LeaveOneOut, KnnShapley };
enum class ValuationMode { Static, Dynamic };

struct ValuationMethod {
  ValuationKind kind = ValuationKind::KnnShapley;
  ValuationMode mode = ValuationMode::Static;
  int k = 5;

  void validate() const;
};

/// Data values q, the round-1 anchor q_min_plus and the derived weights v.
struct ValueProfile {
  ValueMap q;
  double q_min_plus = 1.0;
  double alpha = 0.5;
  double zero_tol = 1e-9;
  ValueMap v;
};

/// Smallest q above zero_tol, or 1.0 when there is none.
double min_positive_value(const ValueMap& q, double zero_tol);

/// Weight for a single value:
///   1                              if q < -zero_tol
///   0                              if |q| <= zero_tol
///   min(1, alpha*q_min_plus / q)   if q > zero_tol
double weight_from_value(double q, double q_min_plus, double alpha, double zero_tol);

ValueMap weights_from_values(const ValueMap& q, double q_min_plus, double alpha, double zero_tol = 1e-9);

/// Round-1 profile: fixes q_min_plus from `q` and derives the weights.
ValueProfile make_profile(ValueMap q, double alpha = 0.5, double zero_tol = 1e-9);

/// Replaces the values, keeping q_min_plus, alpha and zero_tol.
ValueProfile refresh_profile(const ValueProfile& base, ValueMap q);

/// q_i = acc(train) - acc(train without i), accuracies measured on `validation`.
ValueMap loo_values(const Dataset& train, const Dataset& validation, const Objective& objective,
                    const TrainOptions& options = {});

/// Exact KNN-Shapley values of every training point for one test point.
/// Returned in training-row order.
Vector knn_sv_single(const Dataset& train, const Eigen::Ref<const Vector>& x_test, double y_test, int k);

/// Exact KNN-Shapley values averaged over the test points.
ValueMap knn_sv(const Dataset& train, const Dataset& test, int k);

/// Runs the base valuation method on `train`.
ValueMap compute_values(const ValuationMethod& method, const Dataset& train, const Dataset& utility,
                        const Objective& objective, const TrainOptions& options = {});

/// Dynamic mode recomputes q on `remaining`; Static mode restricts the
/// existing q to the remaining ids. q_min_plus is never touched.
ValueProfile dynamic_update(const ValueProfile& profile, const Dataset& remaining, const Dataset& utility,
                            const ValuationMethod& method, const Objective& objective,
                            const TrainOptions& options = {});

ValuationKind parse_valuation_kind(std::string_view name);

/// Columns: id,q,v.
void write_profile_csv(const ValueProfile& profile, const std::filesystem::path& path);

}  // namespace valunlearn
