#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "valunlearn/config.hpp"
#include "valunlearn/data_io.hpp"
#include "valunlearn/errors.hpp"
#include "valunlearn/harness.hpp"
#include "valunlearn/model.hpp"
#include "valunlearn/report.hpp"
#include "valunlearn/valuation.hpp"

namespace valunlearn::cli {
namespace {

constexpr int kUsage = 2;
constexpr int kFailure = 1;

struct DataFlags {
  std::string path;
  std::string label = "y";
  std::string positive = "1";
  std::string id = "id";
};

void add_data_flags(CLI::App* cmd, DataFlags& flags, const std::string& name, bool required) {
  auto* opt = cmd->add_option(name, flags.path, "CSV dataset");
  if (required) opt->required();
  cmd->add_option("--label", flags.label, "Label column")->capture_default_str();
  cmd->add_option("--positive", flags.positive, "Label token of the positive class")->capture_default_str();
  cmd->add_option("--id-column", flags.id, "Id column (empty: row order)")->capture_default_str();
}

Dataset load_data(const std::string& path, const DataFlags& flags) {
  CsvLoadOptions options;
  options.id_column = flags.id;
  return load_csv(path, flags.label, flags.positive, options);
}

SynthConfig synth_from_file(const std::string& path, std::uint64_t seed) {
  const KeyValues kv = KeyValues::load(path);
  SynthConfig c = kv.has("preset") ? SynthConfig::preset(kv.get("preset", ""), seed) : SynthConfig{};
  c.n = kv.get_long("n", c.n);
  c.d_informative = static_cast<int>(kv.get_long("d_informative", c.d_informative));
  c.d_redundant = static_cast<int>(kv.get_long("d_redundant", c.d_redundant));
  c.positive_ratio = kv.get_double("positive_ratio", c.positive_ratio);
  c.noise_ratio = kv.get_double("noise_ratio", c.noise_ratio);
  c.cube_side = kv.get_double("cube_side", c.cube_side);
  c.seed = static_cast<std::uint64_t>(kv.get_long("seed", static_cast<long>(seed)));
  if (auto unused = kv.unused(); !unused.empty()) throw ConfigError(path + ": unknown key '" + unused.front() + "'");
  return c;
}

void print_aggregate(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << std::setw(4) << "t" << std::setw(7) << "count" << std::setw(14) << "residual" << std::setw(10) << "acc"
      << std::setw(10) << "cert" << std::setw(10) << "retrain" << '\n';
  for (const auto& r : rows) {
    out << std::setw(4) << r.t << std::setw(7) << r.count << std::setw(14) << std::setprecision(4) << r.residual_mean
        << std::setw(10) << r.accuracy_mean << std::setw(10) << r.certified_rate << std::setw(10)
        << r.retrained_rate << '\n';
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certified machine unlearning with data value weighting", "valunlearn"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset as CSV");
  std::string gen_preset, gen_config, gen_out;
  std::uint64_t gen_seed = 0;
  SynthConfig gen_synth;
  gen->add_option("--preset", gen_preset, "sy1..sy6 or motivating");
  gen->add_option("--config", gen_config, "Key/value file with generator settings")->check(CLI::ExistingFile);
  gen->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen->add_option("--n", gen_synth.n, "Number of rows");
  gen->add_option("--d-informative", gen_synth.d_informative, "Informative features");
  gen->add_option("--d-redundant", gen_synth.d_redundant, "Redundant features");
  gen->add_option("--positive-ratio", gen_synth.positive_ratio, "Fraction of positive labels");
  gen->add_option("--noise-ratio", gen_synth.noise_ratio, "Fraction of flipped labels");
  gen->add_option("--cube-side", gen_synth.cube_side, "Hypercube side length");
  gen->add_option("--out", gen_out, "Output CSV")->required();

  // value
  auto* value = app.add_subcommand("value", "Compute data values and weights");
  DataFlags value_data;
  add_data_flags(value, value_data, "--data", true);
  std::string value_method = "knn-sv", value_utility, value_out, value_loss = "logistic";
  int value_k = 5;
  double value_alpha = 0.5, value_lambda = 1e-3, value_tol = 1e-9;
  std::uint64_t value_seed = 0;
  value->add_option("--method", value_method, "knn-sv or loo")->capture_default_str();
  value->add_option("--k", value_k, "Neighbours for knn-sv")->capture_default_str();
  value->add_option("--utility", value_utility, "Utility CSV (test set for knn-sv, validation for loo)");
  value->add_option("--alpha", value_alpha, "Weight scaling for positive values")->capture_default_str();
  value->add_option("--zero-tol", value_tol, "Values within this of 0 count as zero")->capture_default_str();
  value->add_option("--loss", value_loss, "Loss for loo retraining")->capture_default_str();
  value->add_option("--lambda", value_lambda, "L2 strength for loo retraining")->capture_default_str();
  value->add_option("--seed", value_seed, "Unused; accepted for uniformity");
  value->add_option("--out", value_out, "Output CSV (id,q,v)")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train a regularized linear classifier");
  DataFlags train_data;
  add_data_flags(tr, train_data, "--data", true);
  std::string train_loss = "logistic", train_test, train_out;
  double train_lambda = 1e-3, train_tol = 1e-8;
  tr->add_option("--loss", train_loss, "logistic, huber-svm or squared")->capture_default_str();
  tr->add_option("--lambda", train_lambda, "L2 strength")->capture_default_str();
  tr->add_option("--tol", train_tol, "Gradient-norm tolerance")->capture_default_str();
  tr->add_option("--test", train_test, "Test CSV for metrics");
  tr->add_option("--out", train_out, "Output JSON");

  // run
  auto* runc = app.add_subcommand("run", "Run the continuous-deletion experiment");
  std::string run_config, run_out = "out";
  std::optional<std::uint64_t> run_seed;
  std::optional<long> run_reps;
  runc->add_option("--config", run_config, "Experiment config (key/value or manifest.json)")->required();
  runc->add_option("--out", run_out, "Output directory")->capture_default_str();
  runc->add_option("--seed", run_seed, "Override the base seed");
  runc->add_option("--repetitions", run_reps, "Override the repetition count");

  // bench
  auto* bench = app.add_subcommand("bench", "Time one simultaneous deletion per method");
  std::string bench_config, bench_out, bench_methods = "retrain,newton,dvwu-k,influence,gradient-ascent";
  long bench_size = 1000;
  int bench_trials = 10;
  std::optional<std::uint64_t> bench_seed;
  bench->add_option("--config", bench_config, "Experiment config")->required();
  bench->add_option("--deletion-size", bench_size, "Points deleted at once")->capture_default_str();
  bench->add_option("--trials", bench_trials, "Timed trials per method")->capture_default_str();
  bench->add_option("--methods", bench_methods, "Comma-separated methods")->capture_default_str();
  bench->add_option("--seed", bench_seed, "Override the base seed");
  bench->add_option("--out", bench_out, "Output CSV");

  // report
  auto* rep = app.add_subcommand("report", "Aggregate an existing rounds.csv");
  std::string rep_raw, rep_out, rep_method = "unknown";
  rep->add_option("--raw", rep_raw, "rounds.csv")->required();
  rep->add_option("--method", rep_method, "Method label for the timing table")->capture_default_str();
  rep->add_option("--out", rep_out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "valunlearn: " << e.what() << "\n";
    err << "Run with --help for usage.\n";
    return kUsage;
  }

  try {
    if (*gen) {
      SynthConfig c;
      if (!gen_config.empty()) {
        c = synth_from_file(gen_config, gen_seed);
      } else if (!gen_preset.empty()) {
        c = SynthConfig::preset(gen_preset, gen_seed);
      }
      for (const auto* opt : gen->get_options()) {
        const std::string name = opt->get_name();
        if (opt->count() == 0) continue;
        if (name == "--n") c.n = gen_synth.n;
        if (name == "--d-informative") c.d_informative = gen_synth.d_informative;
        if (name == "--d-redundant") c.d_redundant = gen_synth.d_redundant;
        if (name == "--positive-ratio") c.positive_ratio = gen_synth.positive_ratio;
        if (name == "--noise-ratio") c.noise_ratio = gen_synth.noise_ratio;
        if (name == "--cube-side") c.cube_side = gen_synth.cube_side;
        if (name == "--seed") c.seed = gen_seed;
      }
      const Dataset data = gen_synthetic(c);
      save_csv(data, gen_out);
      out << "wrote " << data.size() << " rows x " << data.dim() << " features to " << gen_out << '\n';
    } else if (*value) {
      const Dataset train = load_data(value_data.path, value_data);
      const Dataset utility = value_utility.empty() ? train : load_data(value_utility, value_data);
      ValuationMethod method;
      method.kind = parse_valuation_kind(value_method);
      method.k = value_k;
      Objective objective;
      objective.loss = LossKind::parse(value_loss);
      objective.lambda = value_lambda;
      const ValueProfile profile =
          make_profile(compute_values(method, train, utility, objective, TrainOptions{}), value_alpha, value_tol);
      write_profile_csv(profile, value_out);
      out << "wrote " << profile.q.size() << " values to " << value_out << " (q_min+ = " << profile.q_min_plus
          << ")\n";
    } else if (*tr) {
      const Dataset data = load_data(train_data.path, train_data);
      Objective objective;
      objective.loss = LossKind::parse(train_loss);
      objective.lambda = train_lambda;
      TrainOptions options;
      options.tolerance = train_tol;
      const ModelState model = train(data, objective, options);
      nlohmann::json doc;
      doc["loss"] = objective.loss.name();
      doc["lambda"] = objective.lambda;
      doc["n"] = data.size();
      doc["w"] = std::vector<double>(model.w.data(), model.w.data() + model.w.size());
      doc["objective"] = objective_value(model.w, objective, data);
      doc["gradient_norm"] = objective_gradient(model.w, objective, data).norm();
      const Metrics train_m = evaluate(model.w, data);
      doc["train_accuracy"] = train_m.accuracy;
      if (!train_test.empty()) {
        const Metrics m = evaluate(model.w, load_data(train_test, train_data));
        doc["test"] = {{"accuracy", m.accuracy},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"misclassification_cost", m.misclassification_cost}};
      }
      if (train_out.empty()) {
        out << doc.dump(2) << '\n';
      } else {
        std::ofstream file(train_out);
        if (!file) throw std::runtime_error("cannot write " + train_out);
        file << doc.dump(2) << '\n';
        out << "trained on " << data.size() << " rows; wrote " << train_out << '\n';
      }
    } else if (*runc) {
      ExperimentConfig config = ExperimentConfig::load(run_config);
      if (run_seed) config.seed = *run_seed;
      if (run_reps) config.repetitions = *run_reps;
      config.validate();
      const ExperimentReport report = run_continuous_deletion(config);
      emit_report(report, run_out);
      long failed = 0;
      for (const auto& r : report.repetitions) {
        if (r.status != "ok") {
          ++failed;
          err << "repetition " << r.repetition << " failed: " << r.error << '\n';
        }
      }
      out << method_name(config.method) << ": " << config.repetitions << " repetitions x " << config.rounds
          << " rounds, " << failed << " failed; wrote " << run_out << '\n';
      print_aggregate(out, report.aggregate);
      return failed == config.repetitions ? kFailure : 0;
    } else if (*bench) {
      ExperimentConfig config = ExperimentConfig::load(bench_config);
      if (bench_seed) config.seed = *bench_seed;
      std::vector<Method> methods;
      std::stringstream list(bench_methods);
      for (std::string name; std::getline(list, name, ',');) methods.push_back(parse_method(name));
      const auto rows = run_efficiency_bench(config, bench_size, methods, bench_trials);
      out << std::setw(18) << "method" << std::setw(14) << "median_s" << std::setw(14) << "min_s" << '\n';
      for (const auto& r : rows) {
        out << std::setw(18) << r.method << std::setw(14) << std::setprecision(4) << r.median_seconds
            << std::setw(14) << r.min_seconds << '\n';
      }
      if (!bench_out.empty()) write_bench_csv(rows, bench_out);
    } else if (*rep) {
      const auto rounds = read_rounds_csv(rep_raw);
      std::filesystem::create_directories(rep_out);
      const auto aggregate = aggregate_rounds(rounds);
      write_aggregate_csv(aggregate, std::filesystem::path(rep_out) / "aggregate.csv");
      write_timing_csv(timing_summary(rep_method, rounds), std::filesystem::path(rep_out) / "timing.csv");
      out << "aggregated " << rounds.size() << " round records into " << rep_out << '\n';
      print_aggregate(out, aggregate);
    }
  } catch (const ConfigError& e) {
    err << "valunlearn: config error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "valunlearn: " << e.what() << '\n';
    return kFailure;
  }
  return 0;
}

}  // namespace valunlearn::cli
