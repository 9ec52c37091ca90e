#include "valunlearn/dataset.hpp"

#include <numeric>
#include <string>
#include <unordered_set>

#include "valunlearn/errors.hpp"

namespace valunlearn {

Dataset::Dataset(Index dim) : features_(0, dim), labels_(0) {}

Dataset::Dataset(FeatureMatrix features, Vector labels, std::vector<PointId> ids)
    : features_(std::move(features)), labels_(std::move(labels)), ids_(std::move(ids)) {
  if (labels_.size() != features_.rows() || static_cast<Index>(ids_.size()) != features_.rows()) {
    throw InvalidArgument("dataset: features, labels and ids must have the same length");
  }
  for (Index i = 0; i < labels_.size(); ++i) {
    if (labels_(i) != 1.0 && labels_(i) != -1.0) {
      throw InvalidArgument("dataset: label at row " + std::to_string(i) + " is not in {-1, +1}");
    }
  }
  build_index();
}

Dataset::Dataset(FeatureMatrix features, Vector labels) {
  std::vector<PointId> ids(static_cast<std::size_t>(labels.size()));
  std::iota(ids.begin(), ids.end(), PointId{0});
  *this = Dataset(std::move(features), std::move(labels), std::move(ids));
}

void Dataset::build_index() {
  index_.clear();
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], static_cast<Index>(i)).second) {
      throw InvalidArgument("dataset: duplicate id " + std::to_string(ids_[i]));
    }
  }
}

std::optional<Index> Dataset::index_of(PointId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  FeatureMatrix x(static_cast<Index>(rows.size()), dim());
  Vector y(static_cast<Index>(rows.size()));
  std::vector<PointId> ids;
  ids.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index r = rows[k];
    if (r < 0 || r >= size()) throw InvalidArgument("dataset: row index out of range");
    x.row(static_cast<Index>(k)) = features_.row(r);
    y(static_cast<Index>(k)) = labels_(r);
    ids.push_back(ids_[static_cast<std::size_t>(r)]);
  }
  return Dataset(std::move(x), std::move(y), std::move(ids));
}

Dataset Dataset::select(std::span<const PointId> ids) const {
  std::vector<Index> rows;
  rows.reserve(ids.size());
  for (PointId id : ids) {
    auto r = index_of(id);
    if (!r) throw InvalidArgument("dataset: unknown id " + std::to_string(id));
    rows.push_back(*r);
  }
  return subset(rows);
}

Dataset Dataset::without(std::span<const PointId> ids) const {
  std::unordered_set<PointId> drop;
  drop.reserve(ids.size());
  for (PointId id : ids) {
    if (!contains(id)) throw InvalidArgument("dataset: unknown id " + std::to_string(id));
    drop.insert(id);
  }
  std::vector<Index> keep;
  keep.reserve(ids_.size() - drop.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!drop.contains(ids_[i])) keep.push_back(static_cast<Index>(i));
  }
  return subset(keep);
}

Dataset Dataset::with_features(FeatureMatrix features) const {
  if (features.rows() != size()) throw InvalidArgument("dataset: replacement features have wrong row count");
  return Dataset(std::move(features), labels_, ids_);
}

}  // namespace valunlearn
