#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "valunlearn/config.hpp"
#include "valunlearn/data_io.hpp"
#include "valunlearn/model.hpp"
#include "valunlearn/unlearn.hpp"
#include "valunlearn/valuation.hpp"

namespace valunlearn {

enum class Method { Retrain, Newton, Influence, GradientAscent, DvwuK, DvwuL, DvwuDK, DvwuDL, WeightedGa };
enum class Perturbation { None, Output, Objective };
enum class ThresholdKind { One, Zero };
enum class DeletionSampling { Uniform, HighValue };

Method parse_method(std::string_view name);
std::string method_name(Method method);
Perturbation parse_perturbation(std::string_view name);
std::string perturbation_name(Perturbation p);

/// Newton, Influence and the DVWU variants: certified with retrain fallback
/// and subject to output/objective perturbation.
bool is_newton_family(Method method);
bool uses_valuation(Method method);

/// Deterministic child seed for a named random stream.
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream);

struct ExperimentConfig {
  // Data source: "synthetic" or "manifest".
  std::string source = "synthetic";
  SynthConfig synth;
  std::filesystem::path manifest;
  bool fresh_data = true;
  double train_fraction = 0.7;
  double validation_fraction = 0.1;
  bool standardize = true;

  Objective objective;
  TrainOptions train;
  double cost_fp = 1.0;
  double cost_fn = 1.0;

  Method method = Method::DvwuK;
  Perturbation perturbation = Perturbation::Output;
  ThresholdKind threshold = ThresholdKind::One;
  bool certify = true;
  /// Residual is checked every `cadence` rounds and always on the last one.
  long cadence = 1;
  double epsilon = 1.0;
  double delta = 1e-4;

  long rounds = 15;
  long deletions = 100;
  /// Per-round deletion sizes; overrides `deletions` when non-empty.
  std::vector<long> deletion_schedule;
  long repetitions = 20;
  std::uint64_t seed = 0;
  DeletionSampling sampling = DeletionSampling::Uniform;

  double alpha = 0.5;
  int knn_k = 5;
  double zero_tol = 1e-9;
  ValuationKind wga_valuation = ValuationKind::KnnShapley;
  ValuationMode wga_mode = ValuationMode::Static;

  double ga_eta = 0.01;
  long ga_steps = 5;

  bool score_published = false;
  /// Worker threads for repetitions; 0 uses the hardware concurrency.
  int threads = 0;

  static ExperimentConfig from_key_values(const KeyValues& kv);
  /// Loads a key/value config, or the "config" object of an emitted manifest.json.
  static ExperimentConfig load(const std::filesystem::path& path);
  KeyValues to_key_values() const;
  void validate() const;

  long batch_size(long t) const;
  long max_batch() const;
  long total_deletions() const;
  std::optional<ValuationMethod> valuation() const;
};

struct PreparedData {
  Dataset train;
  Dataset validation;
  Dataset test;
};

/// Generates or loads, splits, standardizes with train statistics and
/// rescales every row by the train max row norm.
PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t repetition_seed);

struct RoundRecord {
  long repetition = 0;
  long t = 0;
  long deleted = 0;
  long remaining = 0;
  double residual = 0.0;
  double post_residual = 0.0;
  double threshold = 0.0;
  double threshold0 = 0.0;
  bool checked = false;
  bool certified = false;
  bool retrained = false;
  /// "", "residual" or "ill-conditioned".
  std::string fallback;
  Metrics metrics;
  std::optional<Metrics> published;
  PhaseTimings timings;
  double elapsed_ms = 0.0;
};

struct RepetitionResult {
  long repetition = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";
  std::string error;
  long n_train = 0;
  Metrics initial;
  std::vector<RoundRecord> rounds;
};

struct AggregateRow {
  long t = 0;
  long count = 0;
  double residual_mean = 0, residual_std = 0;
  double accuracy_mean = 0, accuracy_std = 0;
  double precision_mean = 0, precision_std = 0;
  double recall_mean = 0, recall_std = 0;
  double cost_mean = 0, cost_std = 0;
  double certified_rate = 0;
  double retrained_rate = 0;
};

struct TimingRow {
  std::string method;
  std::string phase;
  long samples = 0;
  double median_ms = 0;
  double mean_ms = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<RepetitionResult> repetitions;
  std::vector<AggregateRow> aggregate;
  std::vector<TimingRow> timing;
};

/// Deletion batches for one repetition: uniform without replacement from the
/// remaining ids, or highest initial KNN value first.
std::vector<std::vector<PointId>> deletion_plan(const ExperimentConfig& config, const PreparedData& data,
                                                std::uint64_t repetition_seed);

/// One repetition of the continuous-deletion protocol.
RepetitionResult run_repetition(const ExperimentConfig& config, long repetition, const PreparedData& data);

ExperimentReport run_continuous_deletion(const ExperimentConfig& config);

struct BenchRow {
  std::string method;
  std::string loss;
  long n_train = 0;
  long deletion_size = 0;
  long trials = 0;
  double median_seconds = 0;
  double min_seconds = 0;
};

/// Wall-clock cost of a single simultaneous deletion for each method
/// (median of `trials` timed runs after one warmup, interleaved across
/// methods). Training, valuation and
/// the influence factorization happen before timing starts.
std::vector<BenchRow> run_efficiency_bench(const ExperimentConfig& config, long deletion_size,
                                           const std::vector<Method>& methods, int trials = 10);

}  // namespace valunlearn
