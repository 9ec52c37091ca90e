#include "valunlearn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "valunlearn/errors.hpp"
#include "valunlearn/report.hpp"

namespace valunlearn {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string normalize(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == '-' || c == '_' || c == ' ') continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string format_double(double x) {
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

std::string join_longs(const std::vector<long>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

ValuationMode parse_mode(std::string_view name) {
  const std::string n = normalize(name);
  if (n == "static") return ValuationMode::Static;
  if (n == "dynamic") return ValuationMode::Dynamic;
  throw ConfigError("unknown valuation mode '" + std::string(name) + "'");
}

}  // namespace

Method parse_method(std::string_view name) {
  const std::string n = normalize(name);
  if (n == "retrain") return Method::Retrain;
  if (n == "newton") return Method::Newton;
  if (n == "influence") return Method::Influence;
  if (n == "gradientascent" || n == "gradienta" || n == "ga") return Method::GradientAscent;
  if (n == "dvwuk") return Method::DvwuK;
  if (n == "dvwul") return Method::DvwuL;
  if (n == "dvwudk") return Method::DvwuDK;
  if (n == "dvwudl") return Method::DvwuDL;
  if (n == "weightedga" || n == "wga") return Method::WeightedGa;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::string method_name(Method method) {
  switch (method) {
    case Method::Retrain: return "retrain";
    case Method::Newton: return "newton";
    case Method::Influence: return "influence";
    case Method::GradientAscent: return "gradient-ascent";
    case Method::DvwuK: return "dvwu-k";
    case Method::DvwuL: return "dvwu-l";
    case Method::DvwuDK: return "dvwu-dk";
    case Method::DvwuDL: return "dvwu-dl";
    case Method::WeightedGa: return "weighted-ga";
  }
  return "?";
}

Perturbation parse_perturbation(std::string_view name) {
  const std::string n = normalize(name);
  if (n == "none") return Perturbation::None;
  if (n == "output") return Perturbation::Output;
  if (n == "objective") return Perturbation::Objective;
  throw ConfigError("unknown perturbation '" + std::string(name) + "'");
}

std::string perturbation_name(Perturbation p) {
  switch (p) {
    case Perturbation::None: return "none";
    case Perturbation::Output: return "output";
    case Perturbation::Objective: return "objective";
  }
  return "?";
}

bool is_newton_family(Method method) {
  switch (method) {
    case Method::Newton:
    case Method::Influence:
    case Method::DvwuK:
    case Method::DvwuL:
    case Method::DvwuDK:
    case Method::DvwuDL: return true;
    default: return false;
  }
}

bool uses_valuation(Method method) {
  switch (method) {
    case Method::DvwuK:
    case Method::DvwuL:
    case Method::DvwuDK:
    case Method::DvwuDL:
    case Method::WeightedGa: return true;
    default: return false;
  }
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view stream) {
  std::uint32_t tag = 2166136261u;
  for (char c : stream) {
    tag ^= static_cast<unsigned char>(c);
    tag *= 16777619u;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32), tag};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// ---------------------------------------------------------------------------
// Config

namespace {

ExperimentConfig parse_config(const KeyValues& kv) {
  ExperimentConfig c;
  c.source = kv.get("source", c.source);
  if (kv.has("preset")) c.synth = SynthConfig::preset(kv.get("preset", ""));
  c.synth.n = kv.get_long("n", c.synth.n);
  c.synth.d_informative = static_cast<int>(kv.get_long("d_informative", c.synth.d_informative));
  c.synth.d_redundant = static_cast<int>(kv.get_long("d_redundant", c.synth.d_redundant));
  c.synth.positive_ratio = kv.get_double("positive_ratio", c.synth.positive_ratio);
  c.synth.noise_ratio = kv.get_double("noise_ratio", c.synth.noise_ratio);
  c.synth.cube_side = kv.get_double("cube_side", c.synth.cube_side);
  if (kv.has("manifest")) {
    std::filesystem::path p = kv.get("manifest", "");
    if (p.is_relative() && !kv.source().empty() && kv.source().front() != '<') {
      p = std::filesystem::path(kv.source()).parent_path() / p;
    }
    c.manifest = p;
  }
  c.fresh_data = kv.get_bool("fresh_data", c.fresh_data);
  c.train_fraction = kv.get_double("train_fraction", c.train_fraction);
  c.validation_fraction = kv.get_double("validation_fraction", c.validation_fraction);
  c.standardize = kv.get_bool("standardize", c.standardize);

  LossKind loss = LossKind::parse(kv.get("loss", "logistic"));
  loss.gamma = kv.get_double("gamma", loss.gamma);
  loss.C = kv.get_double("C", loss.C);
  loss.beta = kv.get_double("beta", loss.beta);
  c.objective.loss = loss;
  c.objective.lambda = kv.get_double("lambda", c.objective.lambda);
  c.train.tolerance = kv.get_double("train_tol", c.train.tolerance);
  c.train.max_iterations = static_cast<int>(kv.get_long("train_max_iter", c.train.max_iterations));
  c.cost_fp = kv.get_double("cost_fp", c.cost_fp);
  c.cost_fn = kv.get_double("cost_fn", c.cost_fn);

  c.method = parse_method(kv.get("method", method_name(c.method)));
  c.perturbation = parse_perturbation(kv.get("perturbation", perturbation_name(c.perturbation)));
  const std::string th = kv.get("threshold", "1");
  if (th == "1" || th == "threshold1") c.threshold = ThresholdKind::One;
  else if (th == "0" || th == "threshold0") c.threshold = ThresholdKind::Zero;
  else throw ConfigError("threshold must be 0 or 1, got '" + th + "'");
  c.certify = kv.get_bool("certify", c.certify);
  c.cadence = kv.get_long("cadence", c.cadence);
  c.epsilon = kv.get_double("epsilon", c.epsilon);
  c.delta = kv.get_double("delta", c.delta);

  c.rounds = kv.get_long("rounds", c.rounds);
  c.deletions = kv.get_long("deletions", c.deletions);
  c.deletion_schedule = kv.get_long_list("deletion_schedule");
  c.repetitions = kv.get_long("repetitions", c.repetitions);
  c.seed = static_cast<std::uint64_t>(kv.get_long("seed", static_cast<long>(c.seed)));
  const std::string sampling = normalize(kv.get("sampling", "uniform"));
  if (sampling == "uniform") c.sampling = DeletionSampling::Uniform;
  else if (sampling == "highvalue") c.sampling = DeletionSampling::HighValue;
  else throw ConfigError("sampling must be uniform or high-value");

  c.alpha = kv.get_double("alpha", c.alpha);
  c.knn_k = static_cast<int>(kv.get_long("knn_k", c.knn_k));
  c.zero_tol = kv.get_double("zero_tol", c.zero_tol);
  if (kv.has("wga_valuation")) c.wga_valuation = parse_valuation_kind(kv.get("wga_valuation", ""));
  if (kv.has("wga_mode")) c.wga_mode = parse_mode(kv.get("wga_mode", ""));
  c.ga_eta = kv.get_double("ga_eta", c.ga_eta);
  c.ga_steps = kv.get_long("ga_steps", c.ga_steps);
  c.score_published = kv.get_bool("score_published", c.score_published);
  c.threads = static_cast<int>(kv.get_long("threads", c.threads));

  if (auto unused = kv.unused(); !unused.empty()) {
    throw ConfigError(kv.source() + ": unknown key '" + unused.front() + "'");
  }
  c.validate();
  return c;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_key_values(const KeyValues& kv) {
  try {
    return parse_config(kv);
  } catch (const InvalidArgument& e) {
    throw ConfigError(kv.source() + ": " + e.what());
  }
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ": malformed JSON: " + e.what());
    }
    if (!doc.contains("config") || !doc["config"].is_object()) {
      throw ConfigError(path.string() + ": manifest has no 'config' object");
    }
    std::stringstream kvtext;
    for (const auto& [k, v] : doc["config"].items()) {
      if (!v.is_string()) throw ConfigError(path.string() + ": config value for '" + k + "' is not a string");
      kvtext << k << " = " << v.get<std::string>() << '\n';
    }
    return from_key_values(KeyValues::parse(kvtext, path.string()));
  }
  std::stringstream stream(text);
  return from_key_values(KeyValues::parse(stream, path.string()));
}

KeyValues ExperimentConfig::to_key_values() const {
  KeyValues kv;
  kv.set("source", source);
  kv.set("n", std::to_string(synth.n));
  kv.set("d_informative", std::to_string(synth.d_informative));
  kv.set("d_redundant", std::to_string(synth.d_redundant));
  kv.set("positive_ratio", format_double(synth.positive_ratio));
  kv.set("noise_ratio", format_double(synth.noise_ratio));
  kv.set("cube_side", format_double(synth.cube_side));
  if (!manifest.empty()) kv.set("manifest", std::filesystem::absolute(manifest).string());
  kv.set("fresh_data", fresh_data ? "true" : "false");
  kv.set("train_fraction", format_double(train_fraction));
  kv.set("validation_fraction", format_double(validation_fraction));
  kv.set("standardize", standardize ? "true" : "false");
  kv.set("loss", objective.loss.name());
  kv.set("gamma", format_double(objective.loss.gamma));
  kv.set("C", format_double(objective.loss.C));
  kv.set("beta", format_double(objective.loss.beta));
  kv.set("lambda", format_double(objective.lambda));
  kv.set("train_tol", format_double(train.tolerance));
  kv.set("train_max_iter", std::to_string(train.max_iterations));
  kv.set("cost_fp", format_double(cost_fp));
  kv.set("cost_fn", format_double(cost_fn));
  kv.set("method", method_name(method));
  kv.set("perturbation", perturbation_name(perturbation));
  kv.set("threshold", threshold == ThresholdKind::One ? "1" : "0");
  kv.set("certify", certify ? "true" : "false");
  kv.set("cadence", std::to_string(cadence));
  kv.set("epsilon", format_double(epsilon));
  kv.set("delta", format_double(delta));
  kv.set("rounds", std::to_string(rounds));
  kv.set("deletions", std::to_string(deletions));
  if (!deletion_schedule.empty()) kv.set("deletion_schedule", join_longs(deletion_schedule));
  kv.set("repetitions", std::to_string(repetitions));
  kv.set("seed", std::to_string(seed));
  kv.set("sampling", sampling == DeletionSampling::Uniform ? "uniform" : "high-value");
  kv.set("alpha", format_double(alpha));
  kv.set("knn_k", std::to_string(knn_k));
  kv.set("zero_tol", format_double(zero_tol));
  kv.set("wga_valuation", wga_valuation == ValuationKind::KnnShapley ? "knn-sv" : "loo");
  kv.set("wga_mode", wga_mode == ValuationMode::Static ? "static" : "dynamic");
  kv.set("ga_eta", format_double(ga_eta));
  kv.set("ga_steps", std::to_string(ga_steps));
  kv.set("score_published", score_published ? "true" : "false");
  kv.set("threads", std::to_string(threads));
  return kv;
}

void ExperimentConfig::validate() const {
  if (source == "synthetic") {
    synth.validate();
  } else if (source == "manifest") {
    if (manifest.empty()) throw InvalidArgument("source=manifest needs a 'manifest' path");
  } else {
    throw InvalidArgument("source must be synthetic or manifest");
  }
  objective.validate(0);
  if (!(train.tolerance > 0) || train.max_iterations < 1) throw InvalidArgument("invalid training options");
  if (rounds < 1) throw InvalidArgument("rounds must be at least 1");
  if (repetitions < 1) throw InvalidArgument("repetitions must be at least 1");
  if (cadence < 1) throw InvalidArgument("cadence must be at least 1");
  if (!deletion_schedule.empty() && static_cast<long>(deletion_schedule.size()) != rounds) {
    throw InvalidArgument("deletion_schedule must list one size per round");
  }
  for (long t = 1; t <= rounds; ++t) {
    if (batch_size(t) < 1) throw InvalidArgument("deletion sizes must be at least 1");
  }
  if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
  if (!(delta > 0 && delta < 1)) throw InvalidArgument("delta must be in (0, 1)");
  if (!(alpha > 0 && alpha <= 1)) throw InvalidArgument("alpha must be in (0, 1]");
  if (knn_k < 1) throw InvalidArgument("knn_k must be at least 1");
  if (!(zero_tol >= 0)) throw InvalidArgument("zero_tol must be nonnegative");
  if (!(ga_eta > 0) || ga_steps < 1) throw InvalidArgument("gradient ascent needs eta > 0 and steps >= 1");
  if (!(train_fraction > 0 && train_fraction < 1)) throw InvalidArgument("train_fraction must be in (0, 1)");
  if (!(validation_fraction >= 0 && validation_fraction < 1)) {
    throw InvalidArgument("validation_fraction must be in [0, 1)");
  }
  if (cost_fp < 0 || cost_fn < 0) throw InvalidArgument("costs must be nonnegative");
  if (threads < 0) throw InvalidArgument("threads must be nonnegative");
}

long ExperimentConfig::batch_size(long t) const {
  if (!deletion_schedule.empty()) return deletion_schedule[static_cast<std::size_t>(t - 1)];
  return deletions;
}

long ExperimentConfig::max_batch() const {
  long best = 0;
  for (long t = 1; t <= rounds; ++t) best = std::max(best, batch_size(t));
  return best;
}

long ExperimentConfig::total_deletions() const {
  long total = 0;
  for (long t = 1; t <= rounds; ++t) total += batch_size(t);
  return total;
}

std::optional<ValuationMethod> ExperimentConfig::valuation() const {
  ValuationMethod v;
  v.k = knn_k;
  switch (method) {
    case Method::DvwuK: v.kind = ValuationKind::KnnShapley; v.mode = ValuationMode::Static; return v;
    case Method::DvwuL: v.kind = ValuationKind::LeaveOneOut; v.mode = ValuationMode::Static; return v;
    case Method::DvwuDK: v.kind = ValuationKind::KnnShapley; v.mode = ValuationMode::Dynamic; return v;
    case Method::DvwuDL: v.kind = ValuationKind::LeaveOneOut; v.mode = ValuationMode::Dynamic; return v;
    case Method::WeightedGa: v.kind = wga_valuation; v.mode = wga_mode; return v;
    default: return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Data

PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t repetition_seed) {
  const std::uint64_t data_base = config.fresh_data ? repetition_seed : config.seed;
  Dataset full;
  if (config.source == "synthetic") {
    SynthConfig synth = config.synth;
    synth.seed = derive_seed(data_base, "data");
    full = gen_synthetic(synth);
  } else {
    full = load_manifest_dataset(DatasetManifest::load(config.manifest));
  }
  const auto valuation = config.valuation();
  const bool needs_validation = valuation && valuation->kind == ValuationKind::LeaveOneOut;
  Split parts = split(full, config.train_fraction, derive_seed(data_base, "split"),
                      needs_validation ? config.validation_fraction : 0.0);

  PreparedData out;
  if (config.standardize) {
    Standardized s = standardize(parts.train);
    out.train = std::move(s.data);
    out.validation = parts.validation.empty() ? parts.validation : s.transform.apply(parts.validation);
    out.test = s.transform.apply(parts.test);
  } else {
    out.train = std::move(parts.train);
    out.validation = std::move(parts.validation);
    out.test = std::move(parts.test);
  }
  const double divisor = std::max(1.0, max_row_norm(out.train));
  out.train = scale_features(out.train, divisor);
  if (!out.validation.empty()) out.validation = scale_features(out.validation, divisor);
  out.test = scale_features(out.test, divisor);
  return out;
}

std::vector<std::vector<PointId>> deletion_plan(const ExperimentConfig& config, const PreparedData& data,
                                                std::uint64_t repetition_seed) {
  if (config.total_deletions() >= data.train.size()) {
    throw BudgetExhausted("deletion plan removes " + std::to_string(config.total_deletions()) + " of " +
                          std::to_string(data.train.size()) + " training points");
  }
  std::vector<PointId> remaining = data.train.ids();
  std::vector<std::vector<PointId>> plan;
  plan.reserve(static_cast<std::size_t>(config.rounds));

  if (config.sampling == DeletionSampling::HighValue) {
    const ValueMap q = knn_sv(data.train, data.test, config.knn_k);
    std::sort(remaining.begin(), remaining.end(), [&](PointId a, PointId b) {
      const double qa = q.at(a), qb = q.at(b);
      return qa != qb ? qa > qb : a < b;
    });
    std::size_t pos = 0;
    for (long t = 1; t <= config.rounds; ++t) {
      const auto m = static_cast<std::size_t>(config.batch_size(t));
      plan.emplace_back(remaining.begin() + static_cast<std::ptrdiff_t>(pos),
                        remaining.begin() + static_cast<std::ptrdiff_t>(pos + m));
      pos += m;
    }
    return plan;
  }

  std::mt19937_64 rng(derive_seed(repetition_seed, "deletions"));
  for (long t = 1; t <= config.rounds; ++t) {
    const auto m = static_cast<std::size_t>(config.batch_size(t));
    // Partial Fisher-Yates: the first m entries become the batch.
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, remaining.size() - 1);
      std::swap(remaining[i], remaining[pick(rng)]);
    }
    plan.emplace_back(remaining.begin(), remaining.begin() + static_cast<std::ptrdiff_t>(m));
    remaining.erase(remaining.begin(), remaining.begin() + static_cast<std::ptrdiff_t>(m));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Continuous deletion

namespace {

struct RoundThresholds {
  double threshold1;
  double threshold0;
  double noise_std;
};

RoundThresholds thresholds_for(const ExperimentConfig& config, const CertBudget& budget, long removed) {
  const double n = static_cast<double>(budget.n);
  const double batch = static_cast<double>(budget.m);
  RoundThresholds out{};
  if (config.perturbation == Perturbation::Objective) {
    const double total = static_cast<double>(config.total_deletions());
    out.threshold1 = residual_bound(budget.C, budget.beta, budget.lambda, n, total, batch);
    out.threshold0 = zero_weight_residual_bound(budget.C, n, total);
  } else {
    out.threshold1 = residual_bound(budget.C, budget.beta, budget.lambda, n, static_cast<double>(removed), batch);
    out.threshold0 = zero_weight_residual_bound(budget.C, n, static_cast<double>(removed));
  }
  out.noise_std = gauss_constant(budget.delta) *
                  parameter_gap_bound(budget.C, budget.beta, budget.lambda, n, static_cast<double>(removed), batch) /
                  budget.epsilon;
  return out;
}

}  // namespace

RepetitionResult run_repetition(const ExperimentConfig& config, long repetition, const PreparedData& data) {
  RepetitionResult result;
  result.repetition = repetition;
  result.seed = config.seed + static_cast<std::uint64_t>(repetition);
  result.n_train = data.train.size();
  const std::uint64_t rep_seed = result.seed;

  try {
    const bool newton_family = is_newton_family(config.method);
    const bool perturbed = newton_family && config.perturbation != Perturbation::None;
    const long n0 = data.train.size();

    Objective objective = config.objective;
    CertBudget budget = CertBudget::make(objective, config.epsilon, config.delta, n0, config.max_batch(), config.rounds);
    if (n0 - config.total_deletions() < 1) throw BudgetExhausted("n - total deletions < 1");
    if (perturbed && config.perturbation == Perturbation::Objective) {
      const double stddev =
          gauss_constant(config.delta) *
          residual_bound(budget.C, budget.beta, budget.lambda, static_cast<double>(n0),
                         static_cast<double>(config.total_deletions()), static_cast<double>(budget.m)) /
          config.epsilon;
      std::mt19937_64 rng(derive_seed(rep_seed, "objective-noise"));
      objective.perturbation = gaussian_noise(data.train.dim(), stddev, rng);
    }

    const auto plan = deletion_plan(config, data, rep_seed);

    ModelState model = train(data.train, objective, config.train);
    Vector w = model.w;
    Matrix H = model.H;
    result.initial = evaluate(w, data.test, config.cost_fp, config.cost_fn);

    std::optional<InfluenceFactor> influence;
    if (config.method == Method::Influence) influence.emplace(H);

    const auto valuation = config.valuation();
    const Dataset& utility =
        valuation && valuation->kind == ValuationKind::LeaveOneOut ? data.validation : data.test;
    ValueProfile profile;
    if (valuation) {
      profile = make_profile(compute_values(*valuation, data.train, utility, objective, config.train), config.alpha,
                             config.zero_tol);
    }

    std::mt19937_64 output_rng(derive_seed(rep_seed, "output-noise"));
    Dataset current = data.train;
    long removed = 0;

    for (long t = 1; t <= config.rounds; ++t) {
      const auto round_start = Clock::now();
      const auto& ids = plan[static_cast<std::size_t>(t - 1)];
      const Dataset deleted = current.select(ids);
      Dataset next = current.without(ids);
      const long n_before = current.size();

      RoundRecord rec;
      rec.repetition = repetition;
      rec.t = t;
      rec.deleted = static_cast<long>(ids.size());
      rec.remaining = next.size();
      bool ill_conditioned = false;

      switch (config.method) {
        case Method::Retrain: {
          const auto start = Clock::now();
          model = train(next, objective, config.train, std::nullopt);
          rec.timings.retrain_ms = ms_since(start);
          w = model.w;
          H = model.H;
          break;
        }
        case Method::Newton:
        case Method::DvwuK:
        case Method::DvwuL:
        case Method::DvwuDK:
        case Method::DvwuDL: {
          const ValueMap* weights = config.method == Method::Newton ? nullptr : &profile.v;
          try {
            NewtonUpdate upd = newton_round(w, H, deleted, weights, n_before, objective);
            w = std::move(upd.w);
            H = std::move(upd.H);
            rec.timings = upd.timings;
          } catch (const IllConditionedHessian&) {
            ill_conditioned = true;
          }
          break;
        }
        case Method::Influence: {
          const auto start = Clock::now();
          w = unlearn_influence(w, *influence, deleted, n_before, objective);
          rec.timings.solve_ms = ms_since(start);
          break;
        }
        case Method::GradientAscent:
        case Method::WeightedGa: {
          const ValueMap* weights = config.method == Method::WeightedGa ? &profile.v : nullptr;
          const auto start = Clock::now();
          w = unlearn_gradient_ascent(w, deleted, weights, config.ga_eta, config.ga_steps, objective);
          rec.timings.gradient_ms = ms_since(start);
          break;
        }
      }
      removed += rec.deleted;

      const RoundThresholds th = thresholds_for(config, budget, removed);
      rec.threshold = config.threshold == ThresholdKind::One ? th.threshold1 : th.threshold0;
      rec.threshold0 = th.threshold0;

      const bool check_due = (t % config.cadence == 0) || t == config.rounds;
      rec.checked = ill_conditioned || check_due || config.method == Method::Retrain;
      bool refit = false;
      if (ill_conditioned) {
        const auto start = Clock::now();
        rec.residual = std::numeric_limits<double>::quiet_NaN();
        model = train(next, objective, config.train);
        rec.timings.retrain_ms = ms_since(start);
        w = model.w;
        H = model.H;
        rec.post_residual = gradient_residual(w, next, objective);
        rec.retrained = true;
        rec.certified = false;
        rec.fallback = "ill-conditioned";
        refit = true;
      } else if (rec.checked && newton_family && config.certify) {
        RoundOutcome outcome = certify_or_retrain(t, w, rec.threshold, next, objective, config.train);
        rec.residual = outcome.residual_norm;
        rec.post_residual = outcome.post_residual_norm;
        rec.certified = outcome.certified;
        rec.retrained = outcome.retrained;
        rec.timings.certify_ms += outcome.elapsed.certify_ms;
        rec.timings.retrain_ms += outcome.elapsed.retrain_ms;
        if (outcome.retrained) {
          w = outcome.refit->w;
          H = outcome.refit->H;
          rec.fallback = "residual";
          refit = true;
        }
      } else if (rec.checked) {
        const auto start = Clock::now();
        rec.residual = gradient_residual(w, next, objective);
        rec.timings.certify_ms += ms_since(start);
        rec.post_residual = rec.residual;
        rec.certified = rec.residual <= rec.threshold;
      } else {
        rec.residual = std::numeric_limits<double>::quiet_NaN();
        rec.post_residual = rec.residual;
      }
      if (refit && influence) influence.emplace(H);

      rec.metrics = evaluate(w, data.test, config.cost_fp, config.cost_fn);
      if (perturbed && config.perturbation == Perturbation::Output) {
        const Vector published = w + gaussian_noise(w.size(), th.noise_std, output_rng);
        if (config.score_published) rec.published = evaluate(published, data.test, config.cost_fp, config.cost_fn);
      }

      if (valuation && t < config.rounds) {
        const auto start = Clock::now();
        if (refit) {
          profile = refresh_profile(profile, compute_values(*valuation, next, utility, objective, config.train));
        } else if (valuation->mode == ValuationMode::Dynamic) {
          profile = dynamic_update(profile, next, utility, *valuation, objective, config.train);
        }
        rec.timings.valuation_ms = ms_since(start);
      }

      current = std::move(next);
      rec.elapsed_ms = ms_since(round_start);
      result.rounds.push_back(std::move(rec));
    }
  } catch (const std::exception& e) {
    result.status = "failed";
    result.error = e.what();
  }
  return result;
}

ExperimentReport run_continuous_deletion(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;
  const auto reps = static_cast<std::size_t>(config.repetitions);
  report.repetitions.resize(reps);

  // Real datasets are loaded once up front to surface load errors early.
  if (config.source == "manifest") (void)load_manifest_dataset(DatasetManifest::load(config.manifest));

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  const auto worker = [&] {
    for (std::size_t r = next++; r < reps; r = next++) {
      const std::uint64_t seed = config.seed + r;
      try {
        const PreparedData data = prepare_data(config, seed);
        report.repetitions[r] = run_repetition(config, static_cast<long>(r), data);
      } catch (const std::exception& e) {
        RepetitionResult failed;
        failed.repetition = static_cast<long>(r);
        failed.seed = seed;
        failed.status = "failed";
        failed.error = e.what();
        report.repetitions[r] = std::move(failed);
      }
    }
  };
  std::size_t threads = config.threads > 0 ? static_cast<std::size_t>(config.threads)
                                           : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, reps);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  std::vector<RoundRecord> all;
  for (const auto& rep : report.repetitions) all.insert(all.end(), rep.rounds.begin(), rep.rounds.end());
  report.aggregate = aggregate_rounds(all);
  report.timing = timing_summary(method_name(config.method), all);
  return report;
}

// ---------------------------------------------------------------------------
// Efficiency bench

std::vector<BenchRow> run_efficiency_bench(const ExperimentConfig& config, long deletion_size,
                                           const std::vector<Method>& methods, int trials) {
  if (trials < 1) throw InvalidArgument("bench: trials must be at least 1");
  ExperimentConfig prep_config = config;
  // Leave-one-out valuation needs the validation split.
  for (Method m : methods) {
    if (m == Method::DvwuL || m == Method::DvwuDL) prep_config.method = m;
  }
  const PreparedData data = prepare_data(prep_config, config.seed);
  if (deletion_size < 1 || deletion_size >= data.train.size()) {
    throw InvalidArgument("bench: deletion size must be in [1, n_train)");
  }
  const long n = data.train.size();
  const Objective& objective = config.objective;

  std::vector<PointId> ids = data.train.ids();
  std::mt19937_64 rng(derive_seed(config.seed, "bench-deletions"));
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(static_cast<std::size_t>(deletion_size));
  const Dataset deleted = data.train.select(ids);
  const Dataset remaining = data.train.without(ids);

  const ModelState model = train(data.train, objective, config.train);
  const InfluenceFactor influence(model.H);

  std::vector<ValueProfile> profiles(methods.size());
  for (std::size_t k = 0; k < methods.size(); ++k) {
    if (!uses_valuation(methods[k])) continue;
    ExperimentConfig c = config;
    c.method = methods[k];
    const ValuationMethod v = *c.valuation();
    const Dataset& utility = v.kind == ValuationKind::LeaveOneOut ? data.validation : data.test;
    profiles[k] =
        make_profile(compute_values(v, data.train, utility, objective, config.train), config.alpha, config.zero_tol);
  }

  Vector sink = Vector::Zero(model.w.size());
  const auto run_once = [&](std::size_t k) {
    const ValueMap& weights = profiles[k].v;
    switch (methods[k]) {
      case Method::Retrain: sink = train(remaining, objective, config.train).w; break;
      case Method::Newton: sink = newton_round(model.w, model.H, deleted, nullptr, n, objective).w; break;
      case Method::DvwuK:
      case Method::DvwuL:
      case Method::DvwuDK:
      case Method::DvwuDL: sink = newton_round(model.w, model.H, deleted, &weights, n, objective).w; break;
      case Method::Influence: sink = unlearn_influence(model.w, influence, deleted, n, objective); break;
      case Method::GradientAscent:
        sink = unlearn_gradient_ascent(model.w, deleted, nullptr, config.ga_eta, config.ga_steps, objective);
        break;
      case Method::WeightedGa:
        sink = unlearn_gradient_ascent(model.w, deleted, &weights, config.ga_eta, config.ga_steps, objective);
        break;
    }
    if (!sink.allFinite()) throw InvalidArgument("bench: non-finite parameters from " + method_name(methods[k]));
  };

  // Trials are interleaved across methods so slow drift in machine load
  // affects every method alike.
  for (std::size_t k = 0; k < methods.size(); ++k) run_once(k);
  std::vector<std::vector<double>> seconds(methods.size());
  for (int i = 0; i < trials; ++i) {
    for (std::size_t k = 0; k < methods.size(); ++k) {
      const auto start = Clock::now();
      run_once(k);
      seconds[k].push_back(std::chrono::duration<double>(Clock::now() - start).count());
    }
  }

  std::vector<BenchRow> rows;
  for (std::size_t k = 0; k < methods.size(); ++k) {
    std::vector<double> sorted = seconds[k];
    std::sort(sorted.begin(), sorted.end());
    BenchRow row;
    row.method = method_name(methods[k]);
    row.loss = objective.loss.name();
    row.n_train = n;
    row.deletion_size = deletion_size;
    row.trials = trials;
    const std::size_t count = sorted.size();
    row.median_seconds = count % 2 ? sorted[count / 2] : 0.5 * (sorted[count / 2 - 1] + sorted[count / 2]);
    row.min_seconds = sorted.front();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace valunlearn
