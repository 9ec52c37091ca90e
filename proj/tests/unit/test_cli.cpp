#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "valunlearn/data_io.hpp"
#include "valunlearn/valuation.hpp"

using namespace valunlearn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("valunlearn_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

long count_lines(const fs::path& p) {
  std::ifstream in(p);
  long n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"gen-data", "--bogus", "1", "--out", "x.csv"}).code == 2);
  CHECK(run({"run"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("run with a missing config names the path") {
  const Result r = run({"run", "--config", "/no/such/dir/exp.cfg"});
  CHECK(r.code == 2);
  CHECK(r.err.find("/no/such/dir/exp.cfg") != std::string::npos);
}

TEST_CASE("run with a malformed config exits with 2") {
  TempDir dir;
  std::ofstream(dir.path / "bad.cfg") << "rounds = 3\nthis line has no equals sign\n";
  CHECK(run({"run", "--config", (dir.path / "bad.cfg").string()}).code == 2);
  std::ofstream(dir.path / "unknown.cfg") << "speed = fast\n";
  CHECK(run({"run", "--config", (dir.path / "unknown.cfg").string()}).code == 2);
  std::ofstream(dir.path / "loss.cfg") << "loss = hinge\n";
  CHECK(run({"run", "--config", (dir.path / "loss.cfg").string()}).code == 2);
}

TEST_CASE("gen-data with the sy1 preset writes 30000 rows") {
  TempDir dir;
  const auto out = dir.path / "sy1.csv";
  const Result r = run({"gen-data", "--preset", "sy1", "--seed", "3", "--out", out.string()});
  CHECK(r.code == 0);
  CHECK(count_lines(out) == 30001);
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("id,x0,", 0) == 0);
  CHECK(header.substr(header.size() - 5) == "x19,y");
}

TEST_CASE("gen-data from a config file") {
  TempDir dir;
  std::ofstream(dir.path / "g.cfg") << "preset = sy6\nn = 200\n";
  const auto out = dir.path / "g.csv";
  CHECK(run({"gen-data", "--config", (dir.path / "g.cfg").string(), "--out", out.string()}).code == 0);
  CHECK(count_lines(out) == 201);
  std::ofstream(dir.path / "bad.cfg") << "preset = sy6\nwidth = 3\n";
  CHECK(run({"gen-data", "--config", (dir.path / "bad.cfg").string(), "--out", out.string()}).code == 2);
}

TEST_CASE("value matches the library on a 10-row csv") {
  TempDir dir;
  SynthConfig c;
  c.n = 10;
  c.seed = 2;
  const Dataset data = gen_synthetic(c);
  save_csv(data, dir.path / "ten.csv");
  const auto out = dir.path / "values.csv";
  const Result r = run({"value", "--data", (dir.path / "ten.csv").string(), "--method", "knn-sv", "--k", "5", "--out",
                        out.string()});
  REQUIRE(r.code == 0);
  CHECK(count_lines(out) == 11);

  CsvLoadOptions opts;
  opts.id_column = "id";
  const Dataset loaded = load_csv(dir.path / "ten.csv", "y", "1", opts);
  write_profile_csv(make_profile(knn_sv(loaded, loaded, 5)), dir.path / "lib.csv");
  CHECK(slurp(out) == slurp(dir.path / "lib.csv"));
}

TEST_CASE("train, run, report and bench") {
  TempDir dir;
  SynthConfig c;
  c.n = 60;
  c.seed = 4;
  save_csv(gen_synthetic(c), dir.path / "d.csv");
  const Result tr = run({"train", "--data", (dir.path / "d.csv").string(), "--out", (dir.path / "m.json").string()});
  CHECK(tr.code == 0);
  CHECK(fs::exists(dir.path / "m.json"));

  std::ofstream(dir.path / "exp.cfg") << "preset = sy1\nn = 500\nrounds = 3\ndeletions = 10\nrepetitions = 2\n"
                                         "threads = 1\n";
  const auto out = dir.path / "run";
  const Result r = run({"run", "--config", (dir.path / "exp.cfg").string(), "--out", out.string(), "--seed", "9"});
  CHECK(r.code == 0);
  CHECK(count_lines(out / "rounds.csv") == 7);

  const Result rep = run({"report", "--raw", (out / "rounds.csv").string(), "--out", (dir.path / "rep").string()});
  CHECK(rep.code == 0);
  CHECK(slurp(dir.path / "rep" / "aggregate.csv") == slurp(out / "aggregate.csv"));

  const Result b = run({"bench", "--config", (dir.path / "exp.cfg").string(), "--deletion-size", "20", "--trials",
                        "3", "--methods", "newton,influence", "--out", (dir.path / "bench.csv").string()});
  CHECK(b.code == 0);
  CHECK(count_lines(dir.path / "bench.csv") == 3);
  CHECK(run({"bench", "--config", (dir.path / "exp.cfg").string(), "--methods", "sisa"}).code == 2);
}
