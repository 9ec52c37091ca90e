#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace valunlearn {

using PointId = std::int64_t;
using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Row-major so that per-sample rows are contiguous.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Binary-labelled feature matrix with stable point identifiers.
///
/// Labels are restricted to {-1, +1} and ids are unique; both are checked on
/// construction. Rows keep their insertion order through subset operations so
/// that every derived dataset is a deterministic function of its parent.
class Dataset {
 public:
  Dataset() = default;
  /// Empty dataset of the given dimension.
  explicit Dataset(Index dim);
  Dataset(FeatureMatrix features, Vector labels, std::vector<PointId> ids);
  /// Ids default to 0..n-1.
  Dataset(FeatureMatrix features, Vector labels);

  Index size() const noexcept { return features_.rows(); }
  Index dim() const noexcept { return features_.cols(); }
  bool empty() const noexcept { return size() == 0; }

  const FeatureMatrix& features() const noexcept { return features_; }
  const Vector& labels() const noexcept { return labels_; }
  const std::vector<PointId>& ids() const noexcept { return ids_; }

  auto row(Index i) const { return features_.row(i); }
  double label(Index i) const { return labels_(i); }
  PointId id(Index i) const { return ids_[static_cast<std::size_t>(i)]; }

  std::optional<Index> index_of(PointId id) const;
  bool contains(PointId id) const { return index_of(id).has_value(); }

  Dataset subset(std::span<const Index> rows) const;
  /// Rows with the given ids, in the order given. Throws on unknown ids.
  Dataset select(std::span<const PointId> ids) const;
  /// All rows except the given ids, original order kept. Throws on unknown ids.
  Dataset without(std::span<const PointId> ids) const;

  Dataset with_features(FeatureMatrix features) const;

 private:
  void build_index();

  FeatureMatrix features_;
  Vector labels_;
  std::vector<PointId> ids_;
  std::unordered_map<PointId, Index> index_;
};

}  // namespace valunlearn
