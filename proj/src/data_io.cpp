#include "valunlearn/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "valunlearn/config.hpp"
#include "valunlearn/errors.hpp"

namespace valunlearn {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV line; double quotes group commas and "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan";
}

bool parse_double(const std::string& cell, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(cell, &used);
    return used == cell.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool label_matches(const std::string& cell, const std::string& token) {
  if (cell == token) return true;
  double a = 0, b = 0;
  return parse_double(cell, a) && parse_double(token, b) && a == b;
}

}  // namespace

void SynthConfig::validate() const {
  if (n < 4) throw InvalidArgument("synth: n must be at least 4");
  if (d_informative < 2) throw InvalidArgument("synth: d_informative must be at least 2");
  if (d_redundant < 0) throw InvalidArgument("synth: d_redundant must be nonnegative");
  if (!(positive_ratio > 0 && positive_ratio < 1)) throw InvalidArgument("synth: positive_ratio must be in (0, 1)");
  if (!(noise_ratio >= 0 && noise_ratio < 1)) throw InvalidArgument("synth: noise_ratio must be in [0, 1)");
  if (!(cube_side > 0)) throw InvalidArgument("synth: cube_side must be positive");
}

SynthConfig SynthConfig::preset(std::string_view name, std::uint64_t seed) {
  struct Row {
    std::string_view name;
    long n;
    int d;
    double pos;
    double noise;
  };
  static constexpr Row rows[] = {
      {"sy1", 30000, 20, 0.5, 0.05},  {"sy2", 30000, 20, 0.5, 0.15}, {"sy3", 30000, 20, 0.5, 0.25},
      {"sy4", 30000, 40, 0.5, 0.05},  {"sy5", 60000, 40, 0.5, 0.05}, {"sy6", 30000, 20, 0.25, 0.05},
      {"motivating", 35, 4, 0.5, 0.1},
  };
  for (const Row& r : rows) {
    if (r.name == name) {
      SynthConfig c;
      c.n = r.n;
      c.d_redundant = 2;
      c.d_informative = r.d - 2;
      c.positive_ratio = r.pos;
      c.noise_ratio = r.noise;
      c.seed = seed;
      return c;
    }
  }
  throw InvalidArgument("unknown synthetic preset '" + std::string(name) + "'");
}

SyntheticData gen_synthetic_detailed(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const int di = config.d_informative;
  const int dr = config.d_redundant;
  const double half = config.cube_side / 2.0;

  // Four distinct vertices: two per class.
  std::bernoulli_distribution coin(0.5);
  std::set<std::vector<int>> seen;
  std::vector<std::vector<int>> vertices;
  while (vertices.size() < 4) {
    std::vector<int> v(static_cast<std::size_t>(di));
    for (int& b : v) b = coin(rng) ? 1 : -1;
    if (seen.insert(v).second) vertices.push_back(std::move(v));
  }

  const long n = config.n;
  const long n_pos = std::lround(config.positive_ratio * static_cast<double>(n));
  const long cluster_size[4] = {(n_pos + 1) / 2, n_pos / 2, (n - n_pos + 1) / 2, (n - n_pos) / 2};

  Matrix informative(n, di);
  Vector labels(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  long row = 0;
  for (int c = 0; c < 4; ++c) {
    for (long k = 0; k < cluster_size[c]; ++k, ++row) {
      for (int j = 0; j < di; ++j) {
        informative(row, j) = half * vertices[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] + normal(rng);
      }
      labels(row) = c < 2 ? 1.0 : -1.0;
    }
  }

  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Matrix mixing(di, dr);
  for (Index i = 0; i < mixing.rows(); ++i) {
    for (Index j = 0; j < mixing.cols(); ++j) mixing(i, j) = unit(rng);
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  FeatureMatrix x(n, di + dr);
  Vector clean(n);
  for (Index r = 0; r < n; ++r) {
    const Index src = order[static_cast<std::size_t>(r)];
    x.row(r).head(di) = informative.row(src);
    if (dr > 0) x.row(r).tail(dr) = informative.row(src) * mixing;
    clean(r) = labels(src);
  }

  Vector noisy = clean;
  const long flips = std::lround(config.noise_ratio * static_cast<double>(n));
  std::vector<Index> pick(static_cast<std::size_t>(n));
  std::iota(pick.begin(), pick.end(), Index{0});
  std::shuffle(pick.begin(), pick.end(), rng);
  for (long k = 0; k < flips; ++k) noisy(pick[static_cast<std::size_t>(k)]) *= -1.0;

  return {Dataset(std::move(x), std::move(noisy)), std::move(clean), std::move(mixing)};
}

Dataset gen_synthetic(const SynthConfig& config) { return gen_synthetic_detailed(config).data; }

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                 const std::string& positive_token, const CsvLoadOptions& options, CsvLoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw LoadError(path.string() + ": missing header row");
  const std::vector<std::string> header = split_csv_line(line);

  long label_col = -1, id_col = -1;
  std::vector<std::size_t> feature_cols;
  const std::set<std::string> drop(options.drop_columns.begin(), options.drop_columns.end());
  for (const auto& d : drop) {
    if (std::find(header.begin(), header.end(), d) == header.end()) {
      throw LoadError(path.string() + ": drop column '" + d + "' not found");
    }
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == label_column) label_col = static_cast<long>(c);
    else if (!options.id_column.empty() && header[c] == options.id_column) id_col = static_cast<long>(c);
    else if (!drop.contains(header[c])) feature_cols.push_back(c);
  }
  if (label_col < 0) throw LoadError(path.string() + ": label column '" + label_column + "' not found");
  if (!options.id_column.empty() && id_col < 0) {
    throw LoadError(path.string() + ": id column '" + options.id_column + "' not found");
  }

  std::vector<double> values;
  std::vector<double> labels;
  std::vector<PointId> ids;
  CsvLoadStats local;
  long data_row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++data_row;
    ++local.rows_read;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw LoadError(path.string() + ": row " + std::to_string(data_row) + " has " + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(header.size()));
    }
    bool missing = is_missing(cells[static_cast<std::size_t>(label_col)]);
    for (std::size_t c : feature_cols) missing = missing || is_missing(cells[c]);
    if (id_col >= 0) missing = missing || is_missing(cells[static_cast<std::size_t>(id_col)]);
    if (missing) {
      ++local.rows_dropped_missing;
      continue;
    }
    for (std::size_t c : feature_cols) {
      double v = 0;
      if (!parse_double(cells[c], v) || !std::isfinite(v)) {
        throw LoadError(path.string() + ": row " + std::to_string(data_row) + ", column '" + header[c] +
                        "': cannot parse '" + cells[c] + "'");
      }
      values.push_back(v);
    }
    labels.push_back(label_matches(cells[static_cast<std::size_t>(label_col)], positive_token) ? 1.0 : -1.0);
    if (id_col >= 0) {
      double idv = 0;
      const std::string& cell = cells[static_cast<std::size_t>(id_col)];
      if (!parse_double(cell, idv) || idv != std::floor(idv)) {
        throw LoadError(path.string() + ": row " + std::to_string(data_row) + ": bad id '" + cell + "'");
      }
      ids.push_back(static_cast<PointId>(idv));
    } else {
      ids.push_back(static_cast<PointId>(data_row - 1));
    }
  }
  if (stats) *stats = local;
  if (labels.empty()) throw LoadError(path.string() + ": empty dataset (no data rows)");

  const Index n = static_cast<Index>(labels.size());
  const Index d = static_cast<Index>(feature_cols.size());
  FeatureMatrix x = Eigen::Map<FeatureMatrix>(values.data(), n, d);
  Vector y = Eigen::Map<Vector>(labels.data(), n);
  try {
    return Dataset(std::move(x), std::move(y), std::move(ids));
  } catch (const InvalidArgument& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "id";
  for (Index j = 0; j < data.dim(); ++j) out << ",x" << j;
  out << ",y\n";
  for (Index i = 0; i < data.size(); ++i) {
    out << data.id(i);
    for (Index j = 0; j < data.dim(); ++j) out << ',' << data.features()(i, j);
    out << ',' << (data.label(i) > 0 ? "1" : "-1") << '\n';
  }
  if (!out) throw LoadError("write failed for " + path.string());
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& manifest_path) {
  const KeyValues kv = KeyValues::load(manifest_path);
  DatasetManifest m;
  std::filesystem::path p = kv.require("path");
  m.path = p.is_absolute() ? p : manifest_path.parent_path() / p;
  m.label_column = kv.require("label_column");
  m.positive_token = kv.get("positive_token", "1");
  m.id_column = kv.get("id_column", "");
  std::stringstream ss(kv.get("drop_columns", ""));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) m.drop_columns.push_back(item);
  }
  if (auto unused = kv.unused(); !unused.empty()) {
    throw ConfigError(manifest_path.string() + ": unknown key '" + unused.front() + "'");
  }
  return m;
}

Dataset load_manifest_dataset(const DatasetManifest& manifest, CsvLoadStats* stats) {
  CsvLoadOptions opts;
  opts.id_column = manifest.id_column;
  opts.drop_columns = manifest.drop_columns;
  return load_csv(manifest.path, manifest.label_column, manifest.positive_token, opts, stats);
}

Dataset StandardizeTransform::apply(const Dataset& data) const {
  if (data.dim() != mean.size()) throw InvalidArgument("standardize: dimension mismatch");
  FeatureMatrix x = data.features();
  x.rowwise() -= mean.transpose();
  x.array().rowwise() /= scale.transpose().array();
  return data.with_features(std::move(x));
}

Standardized standardize(const Dataset& data) {
  if (data.size() < 2) throw InvalidArgument("standardize: need at least two rows");
  StandardizeTransform t;
  t.mean = data.features().colwise().mean().transpose();
  const FeatureMatrix centered = data.features().rowwise() - t.mean.transpose();
  t.scale = (centered.colwise().squaredNorm() / static_cast<double>(data.size() - 1)).cwiseSqrt().transpose();
  for (Index j = 0; j < t.scale.size(); ++j) {
    if (!(t.scale(j) > 0)) t.scale(j) = 1.0;
  }
  Dataset out = t.apply(data);
  return {std::move(out), std::move(t)};
}

double max_row_norm(const Dataset& data) {
  if (data.empty()) return 0.0;
  return data.features().rowwise().norm().maxCoeff();
}

Dataset scale_features(const Dataset& data, double divisor) {
  if (!(divisor > 0)) throw InvalidArgument("scale_features: divisor must be positive");
  return data.with_features(data.features() / divisor);
}

Dataset norm_bound(const Dataset& data) {
  if (data.empty()) throw InvalidArgument("norm_bound: empty dataset");
  return scale_features(data, std::max(1.0, max_row_norm(data)));
}

Split split(const Dataset& data, double train_fraction, std::uint64_t seed, double validation_fraction) {
  if (!(train_fraction > 0 && train_fraction < 1)) throw InvalidArgument("split: train_fraction must be in (0, 1)");
  if (!(validation_fraction >= 0 && validation_fraction < 1)) {
    throw InvalidArgument("split: validation_fraction must be in [0, 1)");
  }
  const Index n = data.size();
  const Index n_trainval = static_cast<Index>(std::llround(train_fraction * static_cast<double>(n)));
  const Index n_val = static_cast<Index>(std::llround(validation_fraction * static_cast<double>(n_trainval)));
  const Index n_test = n - n_trainval;
  const Index n_train = n_trainval - n_val;
  if (n_train < 1 || n_test < 1 || (validation_fraction > 0 && n_val < 1)) {
    throw InvalidArgument("split: fractions leave an empty part for n = " + std::to_string(n));
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  auto part = [&](Index from, Index count) {
    std::vector<Index> rows(order.begin() + from, order.begin() + from + count);
    std::sort(rows.begin(), rows.end());
    return data.subset(rows);
  };
  Split s;
  s.validation = n_val > 0 ? part(0, n_val) : Dataset(data.dim());
  s.train = part(n_val, n_train);
  s.test = part(n_trainval, n_test);
  return s;
}

}  // namespace valunlearn
