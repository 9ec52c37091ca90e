#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "valunlearn/dataset.hpp"

namespace valunlearn {

/// Gaussian clusters on hypercube vertices with redundant linear features
/// and uniform label noise.
struct SynthConfig {
  long n = 1000;
  int d_informative = 2;
  int d_redundant = 2;
  double positive_ratio = 0.5;
  double noise_ratio = 0.1;
  double cube_side = 2.0;
  std::uint64_t seed = 0;

  int dim() const { return d_informative + d_redundant; }
  void validate() const;

  /// Named configurations sy1..sy6 (two redundant features each).
  static SynthConfig preset(std::string_view name, std::uint64_t seed = 0);
};

struct SyntheticData {
  Dataset data;
  /// Labels before flipping, aligned with data rows.
  Vector clean_labels;
  /// d_informative x d_redundant coefficients of the redundant features.
  Matrix mixing;
};

SyntheticData gen_synthetic_detailed(const SynthConfig& config);
Dataset gen_synthetic(const SynthConfig& config);

struct CsvLoadOptions {
  /// Column holding stable ids; row order is used when empty.
  std::string id_column;
  std::vector<std::string> drop_columns;
};

struct CsvLoadStats {
  long rows_read = 0;
  long rows_dropped_missing = 0;
};

/// Comma-delimited with a header row. Every non-label, non-id, non-dropped
/// column is a numeric feature. Rows with empty or NA cells are dropped and
/// counted; any other unparseable cell is a LoadError naming the row.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                 const std::string& positive_token, const CsvLoadOptions& options = {},
                 CsvLoadStats* stats = nullptr);

/// Columns: id, x0..x{d-1}, y (labels written as 1 / -1).
void save_csv(const Dataset& data, const std::filesystem::path& path);

/// Key/value file: path, label_column, positive_token, id_column, drop_columns.
struct DatasetManifest {
  std::filesystem::path path;
  std::string label_column;
  std::string positive_token = "1";
  std::string id_column;
  std::vector<std::string> drop_columns;

  static DatasetManifest load(const std::filesystem::path& manifest_path);
};

Dataset load_manifest_dataset(const DatasetManifest& manifest, CsvLoadStats* stats = nullptr);

/// Per-feature affine map fitted on one dataset and applied to others.
struct StandardizeTransform {
  Vector mean;
  /// Sample standard deviation, or 1 for constant features.
  Vector scale;

  Dataset apply(const Dataset& data) const;
};

struct Standardized {
  Dataset data;
  StandardizeTransform transform;
};

Standardized standardize(const Dataset& data);

double max_row_norm(const Dataset& data);
Dataset scale_features(const Dataset& data, double divisor);
/// Divides every row by max(1, max_i |x_i|).
Dataset norm_bound(const Dataset& data);

struct Split {
  Dataset train;
  Dataset validation;
  Dataset test;
};

/// Seeded shuffle into train/test by `train_fraction`; `validation_fraction`
/// of the train portion is carved out as validation (none when 0).
Split split(const Dataset& data, double train_fraction, std::uint64_t seed, double validation_fraction = 0.0);

}  // namespace valunlearn
