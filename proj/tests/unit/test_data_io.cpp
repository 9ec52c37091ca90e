#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "support.hpp"
#include "valunlearn/data_io.hpp"
#include "valunlearn/errors.hpp"
#include "valunlearn/model.hpp"

using namespace valunlearn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("valunlearn_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("sy1 preset has the tabulated shape") {
  SynthConfig c = SynthConfig::preset("sy1", 1);
  CHECK(c.n == 30000);
  CHECK(c.dim() == 20);
  CHECK(c.positive_ratio == 0.5);
  CHECK(c.noise_ratio == 0.05);
  const SyntheticData s = gen_synthetic_detailed(c);
  CHECK(s.data.size() == 30000);
  CHECK(s.data.dim() == 20);
  CHECK((s.clean_labels.array() > 0).count() == 15000);
  CHECK((s.clean_labels.array() != s.data.labels().array()).count() == 1500);
  CHECK_THROWS_AS(SynthConfig::preset("sy9"), InvalidArgument);
}

TEST_CASE("synthetic generation details") {
  SynthConfig c;
  c.n = 1001;
  c.d_informative = 4;
  c.d_redundant = 3;
  c.positive_ratio = 0.3;
  c.noise_ratio = 0.1;
  c.seed = 9;
  const SyntheticData s = gen_synthetic_detailed(c);
  CHECK((s.clean_labels.array() > 0).count() == std::lround(0.3 * 1001));
  CHECK((s.clean_labels.array() != s.data.labels().array()).count() == std::lround(0.1 * 1001));

  // Redundant columns lie in the span of the informative ones.
  const Matrix X = s.data.features();
  const Matrix inf = X.leftCols(4);
  const Matrix red = X.rightCols(3);
  const Matrix coef = inf.colPivHouseholderQr().solve(red);
  CHECK((inf * coef - red).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((inf * s.mixing - red).cwiseAbs().maxCoeff() <= 1e-12);

  const Dataset again = gen_synthetic(c);
  CHECK(again.features() == s.data.features());
  CHECK(again.labels() == s.data.labels());
  c.seed = 10;
  CHECK(gen_synthetic(c).features() != s.data.features());

  SynthConfig bad = c;
  bad.d_informative = 1;
  CHECK_THROWS_AS(gen_synthetic(bad), InvalidArgument);
  bad = c;
  bad.noise_ratio = 1.0;
  CHECK_THROWS_AS(gen_synthetic(bad), InvalidArgument);
  bad = c;
  bad.positive_ratio = 0.0;
  CHECK_THROWS_AS(gen_synthetic(bad), InvalidArgument);
}

TEST_CASE("clean clusters are well separated at a wide cube side") {
  SynthConfig c;
  c.n = 500;
  c.d_informative = 6;
  c.d_redundant = 2;
  c.cube_side = 10.0;
  c.seed = 4;
  const SyntheticData s = gen_synthetic_detailed(c);
  const auto& x = s.data.features();
  long hits = 0;
  for (Index i = 0; i < x.rows(); ++i) {
    Index best = -1;
    double best_d = 0;
    for (Index j = 0; j < x.rows(); ++j) {
      if (j == i) continue;
      const double dist = (x.row(i) - x.row(j)).squaredNorm();
      if (best < 0 || dist < best_d) {
        best = j;
        best_d = dist;
      }
    }
    hits += s.clean_labels(best) == s.clean_labels(i);
  }
  CHECK(static_cast<double>(hits) / static_cast<double>(x.rows()) > 0.99);
}

TEST_CASE("csv loading") {
  TempDir dir;
  write_file(dir.path / "a.csv", "f1,label,f2\n1.5,0,2\n-1,1,3.25\n0,1,\"4\"\n");
  const Dataset d = load_csv(dir.path / "a.csv", "label", "1");
  REQUIRE(d.size() == 3);
  CHECK(d.dim() == 2);
  CHECK(d.label(0) == -1.0);
  CHECK(d.label(1) == 1.0);
  CHECK(d.label(2) == 1.0);
  CHECK(d.row(1)(1) == 3.25);
  CHECK(d.ids() == std::vector<PointId>{0, 1, 2});

  write_file(dir.path / "header.csv", "f1,label\n");
  CHECK_THROWS_WITH_AS(load_csv(dir.path / "header.csv", "label", "1"), doctest::Contains("empty"), LoadError);

  write_file(dir.path / "bad.csv", "f1,label\n1,1\nabc,0\n");
  CHECK_THROWS_WITH_AS(load_csv(dir.path / "bad.csv", "label", "1"), doctest::Contains("row"), LoadError);
  CHECK_THROWS_AS(load_csv(dir.path / "a.csv", "nope", "1"), LoadError);
  CHECK_THROWS_AS(load_csv(dir.path / "missing.csv", "label", "1"), LoadError);

  write_file(dir.path / "na.csv", "id,f1,drop,label\n10,1,x,yes\n11,NA,y,no\n12,,z,yes\n13,2,w,no\n");
  CsvLoadOptions opts;
  opts.id_column = "id";
  opts.drop_columns = {"drop"};
  CsvLoadStats stats;
  const Dataset na = load_csv(dir.path / "na.csv", "label", "yes", opts, &stats);
  CHECK(na.size() == 2);
  CHECK(na.ids() == std::vector<PointId>{10, 13});
  CHECK(stats.rows_read == 4);
  CHECK(stats.rows_dropped_missing == 2);
}

TEST_CASE("csv round trip") {
  TempDir dir;
  const Dataset d = testsupport::random_dataset(25, 4, 3);
  save_csv(d, dir.path / "rt.csv");
  CsvLoadOptions opts;
  opts.id_column = "id";
  const Dataset back = load_csv(dir.path / "rt.csv", "y", "1", opts);
  CHECK((back.features() - d.features()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(back.labels() == d.labels());
  CHECK(back.ids() == d.ids());
}

TEST_CASE("dataset manifests") {
  TempDir dir;
  write_file(dir.path / "data.csv", "id,a,b,target\n1,0.5,1,pos\n2,0.25,2,neg\n");
  write_file(dir.path / "m.cfg", "path = data.csv\nlabel_column = target\npositive_token = pos\nid_column = id\n"
                                 "drop_columns = b\n");
  const Dataset d = load_manifest_dataset(DatasetManifest::load(dir.path / "m.cfg"));
  CHECK(d.size() == 2);
  CHECK(d.dim() == 1);
  CHECK(d.label(0) == 1.0);
  write_file(dir.path / "bad.cfg", "path = data.csv\nlabel_column = target\ncolour = red\n");
  CHECK_THROWS_AS(DatasetManifest::load(dir.path / "bad.cfg"), ConfigError);
  CHECK_THROWS_AS(DatasetManifest::load(dir.path / "none.cfg"), ConfigError);
}

TEST_CASE("standardize") {
  FeatureMatrix x(4, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5;
  const Dataset d(x, (Vector(4) << 1, -1, 1, -1).finished());
  const Standardized s = standardize(d);
  const auto col0 = s.data.features().col(0);
  CHECK(std::abs(col0.mean()) <= 1e-10);
  const double var = (col0.array() - col0.mean()).square().sum() / 3.0;
  CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-10);
  CHECK(s.data.features().col(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.transform.scale(1) == 1.0);

  FeatureMatrix t(1, 2);
  t << 2.5, 6.0;
  const Dataset test(t, (Vector(1) << 1).finished());
  const Dataset applied = s.transform.apply(test);
  CHECK(applied.row(0)(0) == doctest::Approx(0.0));
  CHECK(applied.row(0)(1) == doctest::Approx(1.0));
}

TEST_CASE("norm bound") {
  FeatureMatrix small(2, 2);
  small << 0.1, 0.2, -0.3, 0.1;
  const Dataset a(small, (Vector(2) << 1, -1).finished());
  CHECK(norm_bound(a).features() == a.features());

  FeatureMatrix big(1, 2);
  big << 3.0, 4.0;
  const Dataset b(big, (Vector(1) << 1).finished());
  CHECK(norm_bound(b).row(0).norm() == doctest::Approx(1.0));

  const Dataset r = testsupport::random_dataset(30, 3, 5);
  const Dataset scaled = scale_features(r, 0.25);
  CHECK(max_row_norm(norm_bound(scaled)) == doctest::Approx(std::min(1.0, max_row_norm(scaled))));
}

TEST_CASE("split") {
  SynthConfig c = SynthConfig::preset("sy1", 2);
  const Dataset full = gen_synthetic(c);
  const Split s = split(full, 0.7, 11, 0.1);
  CHECK(s.train.size() + s.validation.size() == 21000);
  CHECK(s.test.size() == 9000);
  CHECK(s.validation.size() == 2100);

  std::set<PointId> seen;
  for (const Dataset* part : {&s.train, &s.validation, &s.test}) {
    for (PointId id : part->ids()) CHECK(seen.insert(id).second);
  }
  CHECK(seen.size() == 30000);

  const Split again = split(full, 0.7, 11, 0.1);
  CHECK(again.train.ids() == s.train.ids());
  CHECK(split(full, 0.7, 12).train.ids() != split(full, 0.7, 11).train.ids());
  CHECK(split(full, 0.7, 11).validation.empty());

  const Dataset tiny = testsupport::random_dataset(2, 2, 1);
  CHECK_THROWS_AS(split(tiny, 0.9, 1), InvalidArgument);
  CHECK_THROWS_AS(split(full, 1.0, 1), InvalidArgument);
}
