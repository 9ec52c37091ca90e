#include "valunlearn/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "valunlearn/errors.hpp"

namespace valunlearn {
namespace {

struct Stats {
  double mean = 0;
  double std = 0;
};

Stats stats_of(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) {
    s.mean = std::numeric_limits<double>::quiet_NaN();
    s.std = s.mean;
    return s;
  }
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

double median_of(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const std::size_t k = xs.size();
  return k % 2 ? xs[k / 2] : 0.5 * (xs[k / 2 - 1] + xs[k / 2]);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  return out;
}

const char* const kRoundsHeader =
    "repetition,t,deleted,remaining,residual,post_residual,threshold,threshold0,checked,certified,retrained,"
    "fallback,accuracy,precision,recall,cost,published_accuracy,published_precision,published_recall,"
    "published_cost,gradient_ms,hessian_ms,solve_ms,valuation_ms,certify_ms,retrain_ms,elapsed_ms";

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument(s);
  return v;
}

}  // namespace

std::vector<AggregateRow> aggregate_rounds(const std::vector<RoundRecord>& rounds) {
  std::map<long, std::vector<const RoundRecord*>> by_t;
  for (const auto& r : rounds) by_t[r.t].push_back(&r);
  std::vector<AggregateRow> out;
  for (const auto& [t, recs] : by_t) {
    std::vector<double> residual, acc, prec, rec, cost;
    double certified = 0, retrained = 0;
    for (const RoundRecord* r : recs) {
      if (!std::isnan(r->residual)) residual.push_back(r->residual);
      acc.push_back(r->metrics.accuracy);
      prec.push_back(r->metrics.precision);
      rec.push_back(r->metrics.recall);
      cost.push_back(r->metrics.misclassification_cost);
      certified += r->certified ? 1 : 0;
      retrained += r->retrained ? 1 : 0;
    }
    AggregateRow row;
    row.t = t;
    row.count = static_cast<long>(recs.size());
    const Stats sr = stats_of(residual), sa = stats_of(acc), sp = stats_of(prec), sc = stats_of(rec),
                sk = stats_of(cost);
    row.residual_mean = sr.mean;
    row.residual_std = sr.std;
    row.accuracy_mean = sa.mean;
    row.accuracy_std = sa.std;
    row.precision_mean = sp.mean;
    row.precision_std = sp.std;
    row.recall_mean = sc.mean;
    row.recall_std = sc.std;
    row.cost_mean = sk.mean;
    row.cost_std = sk.std;
    row.certified_rate = certified / static_cast<double>(recs.size());
    row.retrained_rate = retrained / static_cast<double>(recs.size());
    out.push_back(row);
  }
  return out;
}

std::vector<TimingRow> timing_summary(const std::string& method, const std::vector<RoundRecord>& rounds) {
  const std::pair<const char*, double PhaseTimings::*> phases[] = {
      {"gradient", &PhaseTimings::gradient_ms},   {"hessian", &PhaseTimings::hessian_ms},
      {"solve", &PhaseTimings::solve_ms},         {"valuation", &PhaseTimings::valuation_ms},
      {"certify", &PhaseTimings::certify_ms},     {"retrain", &PhaseTimings::retrain_ms},
  };
  std::vector<TimingRow> out;
  for (const auto& [name, member] : phases) {
    std::vector<double> xs;
    for (const auto& r : rounds) xs.push_back(r.timings.*member);
    TimingRow row;
    row.method = method;
    row.phase = name;
    row.samples = static_cast<long>(xs.size());
    row.median_ms = median_of(xs);
    row.mean_ms = stats_of(xs).mean;
    out.push_back(row);
  }
  std::vector<double> total;
  for (const auto& r : rounds) total.push_back(r.elapsed_ms);
  out.push_back({method, "round", static_cast<long>(total.size()), median_of(total), stats_of(total).mean});
  return out;
}

void write_rounds_csv(const std::vector<RoundRecord>& rounds, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kRoundsHeader << '\n';
  for (const auto& r : rounds) {
    out << r.repetition << ',' << r.t << ',' << r.deleted << ',' << r.remaining << ',' << r.residual << ','
        << r.post_residual << ',' << r.threshold << ',' << r.threshold0 << ',' << int(r.checked) << ','
        << int(r.certified) << ',' << int(r.retrained) << ',' << r.fallback << ',' << r.metrics.accuracy << ','
        << r.metrics.precision << ',' << r.metrics.recall << ',' << r.metrics.misclassification_cost << ',';
    if (r.published) {
      out << r.published->accuracy << ',' << r.published->precision << ',' << r.published->recall << ','
          << r.published->misclassification_cost << ',';
    } else {
      out << ",,,,";
    }
    const auto& tm = r.timings;
    out << tm.gradient_ms << ',' << tm.hessian_ms << ',' << tm.solve_ms << ',' << tm.valuation_ms << ','
        << tm.certify_ms << ',' << tm.retrain_ms << ',' << r.elapsed_ms << '\n';
  }
}

void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "t,count,residual_mean,residual_std,accuracy_mean,accuracy_std,precision_mean,precision_std,"
         "recall_mean,recall_std,cost_mean,cost_std,certified_rate,retrained_rate\n";
  for (const auto& r : rows) {
    out << r.t << ',' << r.count << ',' << r.residual_mean << ',' << r.residual_std << ',' << r.accuracy_mean << ','
        << r.accuracy_std << ',' << r.precision_mean << ',' << r.precision_std << ',' << r.recall_mean << ','
        << r.recall_std << ',' << r.cost_mean << ',' << r.cost_std << ',' << r.certified_rate << ','
        << r.retrained_rate << '\n';
  }
}

void write_timing_csv(const std::vector<TimingRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "method,phase,samples,median_ms,mean_ms\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.phase << ',' << r.samples << ',' << r.median_ms << ',' << r.mean_ms << '\n';
  }
}

void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "method,loss,n_train,deletion_size,trials,median_seconds,min_seconds\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.loss << ',' << r.n_train << ',' << r.deletion_size << ',' << r.trials << ','
        << r.median_seconds << ',' << r.min_seconds << '\n';
  }
}

void write_manifest_json(const ExperimentReport& report, const std::filesystem::path& path) {
  using nlohmann::json;
  const ExperimentConfig& c = report.config;
  json doc;
  json cfg = json::object();
  const KeyValues kv = c.to_key_values();
  for (const auto& [k, v] : kv.entries()) cfg[k] = v;
  doc["config"] = cfg;

  json reps = json::array();
  for (const auto& r : report.repetitions) {
    json rep{{"repetition", r.repetition}, {"seed", r.seed}, {"status", r.status}, {"n_train", r.n_train}};
    if (!r.error.empty()) rep["error"] = r.error;
    reps.push_back(rep);
  }
  doc["repetitions"] = reps;

  const double C = c.objective.loss.C, beta = c.objective.loss.beta, lambda = c.objective.lambda;
  json constants{{"C", C},
                 {"beta", beta},
                 {"lambda", lambda},
                 {"epsilon", c.epsilon},
                 {"delta", c.delta},
                 {"gauss_constant", gauss_constant(c.delta)},
                 {"max_batch", c.max_batch()},
                 {"rounds", c.rounds}};
  long n = 0;
  for (const auto& r : report.repetitions) n = std::max(n, r.n_train);
  if (n > c.total_deletions()) {
    const double dn = static_cast<double>(n), batch = static_cast<double>(c.max_batch());
    constants["n_train"] = n;
    constants["epsilon2_prime"] =
        residual_bound(C, beta, lambda, dn, static_cast<double>(c.total_deletions()), batch);
    json per_round = json::array();
    long removed = 0;
    for (long t = 1; t <= c.rounds; ++t) {
      removed += c.batch_size(t);
      const double eps1 = parameter_gap_bound(C, beta, lambda, dn, static_cast<double>(removed), batch);
      per_round.push_back({{"t", t},
                           {"removed", removed},
                           {"epsilon1_prime", eps1},
                           {"threshold1", residual_bound(C, beta, lambda, dn, static_cast<double>(removed), batch)},
                           {"threshold0", zero_weight_residual_bound(C, dn, static_cast<double>(removed))},
                           {"output_noise_std", gauss_constant(c.delta) * eps1 / c.epsilon}});
    }
    constants["per_round"] = per_round;
  }
  doc["constants"] = constants;
  doc["files"] = {"rounds.csv", "aggregate.csv", "timing.csv"};

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

void emit_report(const ExperimentReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<RoundRecord> all;
  for (const auto& rep : report.repetitions) all.insert(all.end(), rep.rounds.begin(), rep.rounds.end());
  write_rounds_csv(all, out_dir / "rounds.csv");
  write_aggregate_csv(report.aggregate, out_dir / "aggregate.csv");
  write_timing_csv(report.timing, out_dir / "timing.csv");
  write_manifest_json(report, out_dir / "manifest.json");
}

std::vector<RoundRecord> read_rounds_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kRoundsHeader) {
    throw LoadError(path.string() + ": not a rounds.csv file");
  }
  std::vector<RoundRecord> out;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_line(line);
    if (f.size() != 27) throw LoadError(path.string() + ": row " + std::to_string(row) + " has wrong field count");
    try {
      RoundRecord r;
      r.repetition = std::stol(f[0]);
      r.t = std::stol(f[1]);
      r.deleted = std::stol(f[2]);
      r.remaining = std::stol(f[3]);
      r.residual = parse_double(f[4]);
      r.post_residual = parse_double(f[5]);
      r.threshold = parse_double(f[6]);
      r.threshold0 = parse_double(f[7]);
      r.checked = f[8] == "1";
      r.certified = f[9] == "1";
      r.retrained = f[10] == "1";
      r.fallback = f[11];
      r.metrics = {parse_double(f[12]), parse_double(f[13]), parse_double(f[14]), parse_double(f[15])};
      if (!f[16].empty()) {
        r.published = Metrics{parse_double(f[16]), parse_double(f[17]), parse_double(f[18]), parse_double(f[19])};
      }
      r.timings = {parse_double(f[20]), parse_double(f[21]), parse_double(f[22]),
                   parse_double(f[23]), parse_double(f[24]), parse_double(f[25])};
      r.elapsed_ms = parse_double(f[26]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw LoadError(path.string() + ": row " + std::to_string(row) + " is malformed");
    }
  }
  return out;
}

}  // namespace valunlearn
