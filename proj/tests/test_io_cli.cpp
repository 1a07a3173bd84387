#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "subsplit/bench.hpp"
#include "subsplit/cli.hpp"
#include "subsplit/csv.hpp"
#include "subsplit/error.hpp"
#include "subsplit/set_transformer.hpp"

using namespace subsplit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "subsplit_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string read_text(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "subsplit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("csv: matrix and label round trips") {
  const fs::path dir = scratch("csv");
  Matrix m(3, 2);
  m << 1.5, -2.25, 1e-300, 3.141592653589793, -0.0, 12345678.9;
  write_matrix_csv(dir / "m.csv", m);
  CHECK(read_matrix_csv(dir / "m.csv") == m);
  const std::vector<std::int32_t> z{0, 3, 1, -2};
  write_labels_csv(dir / "z.csv", z);
  CHECK(read_labels_csv(dir / "z.csv") == z);
}

TEST_CASE("csv: malformed input") {
  const fs::path dir = scratch("csv_bad");
  write_text(dir / "ragged.csv", "1,2\n3\n");
  write_text(dir / "nan.csv", "1,2\nnan,4\n");
  write_text(dir / "text.csv", "1,2\nfoo,4\n");
  write_text(dir / "empty.csv", "");
  for (const char* name : {"ragged.csv", "nan.csv", "text.csv", "empty.csv"}) {
    try {
      read_matrix_csv(dir / name);
      FAIL("expected InvalidData for " << name);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::InvalidData);
    }
  }
  try {
    read_matrix_csv(dir / "missing.csv");
    FAIL("expected Io");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Io);
  }
}

TEST_CASE("csv: trace columns and nan for unknown metrics") {
  const fs::path dir = scratch("trace");
  MetricsRow r;
  r.iter = 1;
  r.k_inferred = 3;
  r.log_posterior = -10.5;
  r.nmi = std::numeric_limits<double>::quiet_NaN();
  r.ari = 0.5;
  write_trace_csv(dir / "t.csv", std::vector<MetricsRow>{r});
  const auto l = lines(read_text(dir / "t.csv"));
  REQUIRE(l.size() == 2);
  CHECK(l[0] == "iter,k_inferred,log_posterior,nmi,ari,k_mae,elapsed_ms,splits_accepted,merges_accepted");
  CHECK(l[1].rfind("1,3,-10.5,nan,0.5,", 0) == 0);
}

TEST_CASE("bench: suite parsing") {
  const BenchSuite s = parse_suite(
      "# comment\n"
      "iters = 30\nrepeats = 3\nstrategies = random, kmeans\nseed = 9\nprior_psi_scale = 0.5\n"
      "[dataset a]\nk = 3\nd = 2\nn = 300\nkappa = 0.01\n"
      "[dataset b]\nk = 2\nn = 100\n");
  CHECK(s.iters == 30);
  CHECK(s.repeats == 3);
  CHECK(s.strategies == std::vector<std::string>{"random", "kmeans"});
  CHECK(s.prior.psi_scale == 0.5);
  REQUIRE(s.datasets.size() == 2);
  CHECK(s.datasets[0].name == "a");
  CHECK(s.datasets[0].spec.niw.kappa == 0.01);
  CHECK(s.datasets[1].spec.n == 100);
  CHECK_THROWS_AS(parse_suite("iters = 3\n"), Error);
  CHECK_THROWS_AS(parse_suite("bogus = 1\n[dataset a]\nk = 2\n"), Error);
  CHECK_THROWS_AS(parse_suite("iters = x\n[dataset a]\nk = 2\n"), Error);
}

TEST_CASE("bench: one trace file per run, deterministic") {
  const std::string text =
      "iters = 8\nrepeats = 3\nstrategies = random,kmeans\nseed = 4\n[dataset tiny]\nk = 3\nn = 200\nkappa = 0.01\n";
  const fs::path d1 = scratch("bench1");
  const fs::path d2 = scratch("bench2");
  const auto r1 = run_benchmark(parse_suite(text), d1);
  BenchSuite two_workers = parse_suite(text);
  two_workers.workers = 2;
  const auto r2 = run_benchmark(two_workers, d2);
  CHECK(r1.size() == 6);
  for (const auto& run : r1) {
    CHECK(run.ok);
    CHECK(fs::exists(run.trace_path));
    CHECK(lines(read_text(run.trace_path)).size() == 9);
  }
  CHECK(fs::exists(d1 / "tiny__kmeans__r2.csv"));
  CHECK(fs::exists(d1 / "summary.csv"));
  CHECK(lines(read_text(d1 / "summary.csv")).size() == 7);
  for (const char* f : {"tiny__random__r0.csv", "tiny__kmeans__r1.csv"}) {
    // elapsed_ms differs between runs; compare everything else
    auto strip = [](const std::string& s) {
      std::string out;
      for (const auto& l : lines(s)) {
        std::stringstream ss(l);
        int col = 0;
        for (std::string c; std::getline(ss, c, ','); ++col) {
          if (col != 6) out += c + ",";
        }
        out += "\n";
      }
      return out;
    };
    CHECK(strip(read_text(d1 / f)) == strip(read_text(d2 / f)));
  }
}

TEST_CASE("bench: failed runs are recorded, not thrown") {
  const fs::path dir = scratch("bench_fail");
  st::StMeta three_d;
  three_d.input_dim = 3;
  st::save_weights(st::StWeights::random(three_d, 1), dir / "w3.bin");
  BenchSuite s = parse_suite("iters = 3\nrepeats = 1\nstrategies = splitnet\nsplitnet_weights = " +
                             (dir / "w3.bin").string() + "\n[dataset a]\nk = 2\nn = 50\n");
  const auto r = run_benchmark(s, dir / "out");
  REQUIRE(r.size() == 1);
  CHECK_FALSE(r[0].ok);
  CHECK_FALSE(r[0].error.empty());
}

TEST_CASE("cli: gen, fit and file outputs") {
  const fs::path dir = scratch("fit");
  const std::string data = (dir / "d.csv").string();
  const std::string gt = (dir / "g.csv").string();
  Run g = cli({"gen", "--k", "3", "--n", "600", "--kappa", "0.005", "--seed", "7", "--out-data", data,
               "--out-labels", gt});
  CHECK(g.code == kExitOk);
  CHECK(read_matrix_csv(data).rows() == 600);

  const std::string labels = (dir / "l.csv").string();
  const std::string trace = (dir / "t.csv").string();
  Run f = cli({"fit", "--data", data, "--alpha", "1", "--iters", "40", "--split-init", "kmeans", "--seed", "7",
               "--out-labels", labels, "--trace", trace, "--gt-labels", gt});
  CHECK(f.code == kExitOk);
  CHECK(read_labels_csv(labels).size() == 600);
  const auto t = lines(read_text(trace));
  CHECK(t.size() == 41);
  CHECK(t.back().find("nan") == std::string::npos);

  const std::string labels2 = (dir / "l2.csv").string();
  cli({"fit", "--data", data, "--alpha", "1", "--iters", "40", "--split-init", "kmeans", "--seed", "7", "--threads",
       "1", "--out-labels", labels2});
  CHECK(read_text(labels) == read_text(labels2));
}

TEST_CASE("cli: gen is deterministic; k = 1 smoke") {
  const fs::path dir = scratch("gen");
  for (const char* name : {"a", "b"}) {
    CHECK(cli({"gen", "--k", "1", "--n", "50", "--seed", "3", "--out-data", (dir / (std::string(name) + ".csv")).string(),
               "--out-labels", (dir / (std::string(name) + "_z.csv")).string()})
              .code == kExitOk);
  }
  CHECK(read_text(dir / "a.csv") == read_text(dir / "b.csv"));
  const auto z = read_labels_csv(dir / "a_z.csv");
  CHECK(std::all_of(z.begin(), z.end(), [](auto v) { return v == 0; }));
}

TEST_CASE("cli: splittable pair passes the filter") {
  const fs::path dir = scratch("pair");
  Run r = cli({"gen", "--splittable-pair", "--kappa", "0.05", "--n-max", "300", "--seed", "2", "--out-data",
               (dir / "p.csv").string(), "--out-labels", (dir / "z.csv").string()});
  REQUIRE(r.code == kExitOk);
  const Matrix x = read_matrix_csv(dir / "p.csv");
  const auto z = read_labels_csv(dir / "z.csv");
  const auto n1 = std::count(z.begin(), z.end(), 0);
  const SuffStats l = suffstats_from_points(x.topRows(n1));
  const SuffStats rr = suffstats_from_points(x.bottomRows(x.rows() - n1));
  CHECK(split_log_hastings(l + rr, l, rr, 1.0, default_prior(x)) > 1.0);
}

TEST_CASE("cli: usage and data errors") {
  const fs::path dir = scratch("errors");
  Run missing = cli({"fit", "--iters", "3"});
  CHECK(missing.code == kExitUsage);
  CHECK(missing.err.find("--data") != std::string::npos);

  write_text(dir / "d.csv", "0,0\n1,1\n2,2\n");
  Run no_weights = cli({"fit", "--data", (dir / "d.csv").string(), "--split-init", "splitnet"});
  CHECK(no_weights.code == kExitUsage);

  CHECK(cli({"fit", "--data", (dir / "nope.csv").string()}).code == kExitData);
  write_text(dir / "bad.csv", "0,0\n1\n");
  CHECK(cli({"fit", "--data", (dir / "bad.csv").string()}).code == kExitData);
  CHECK(cli({"fit", "--data", (dir / "d.csv").string(), "--alpha", "-1"}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"gen", "--k", "5", "--n", "3", "--out-data", (dir / "x.csv").string(), "--out-labels",
             (dir / "y.csv").string()})
            .code == kExitUsage);
  CHECK(cli({"bench", "--suite", (dir / "none.suite").string(), "--out-dir", (dir / "o").string()}).code != kExitOk);
}

TEST_CASE("cli: eval-split rows and baselines") {
  const fs::path dir = scratch("eval");
  const std::string out = (dir / "e.csv").string();
  Run r = cli({"eval-split", "--difficulty", "easy", "--pairs", "40", "--strategies", "random,kmeans", "--seed", "3",
               "--out", out});
  REQUIRE(r.code == kExitOk);
  const auto l = lines(read_text(out));
  REQUIRE(l.size() == 41);
  CHECK(l[0] == "pair,n,log_h_gt,random_accuracy,random_log_h,kmeans_accuracy,kmeans_log_h");
  std::vector<double> acc_random, acc_kmeans;
  for (std::size_t i = 1; i < l.size(); ++i) {
    std::vector<std::string> f;
    std::stringstream ss(l[i]);
    for (std::string c; std::getline(ss, c, ',');) f.push_back(c);
    acc_random.push_back(std::stod(f[3]));
    acc_kmeans.push_back(std::stod(f[5]));
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  CHECK(median(acc_kmeans) >= 0.95);
  CHECK(median(acc_random) < 0.6);

  const std::string w = (dir / "w.bin").string();
  st::save_weights(st::StWeights::random(st::StMeta{}, 1), w);
  Run s = cli({"eval-split", "--pairs", "3", "--strategies", "splitnet", "--splitnet-weights", w, "--out", out});
  CHECK(s.code == kExitOk);
  CHECK(lines(read_text(out)).size() == 4);
  CHECK(cli({"eval-split", "--pairs", "3", "--strategies", "splitnet"}).code == kExitUsage);
  CHECK(cli({"eval-split", "--difficulty", "brutal"}).code == kExitUsage);
}
