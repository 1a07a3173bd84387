#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "subsplit/datagen.hpp"
#include "subsplit/metrics.hpp"
#include "subsplit/sampler.hpp"

namespace subsplit {

struct PriorOverrides {
  double kappa = 1.0;
  double nu = -1.0;  // <= 0 selects D + 3
  double psi_scale = 1.0;
};

// Runs the sampler and converts every iteration into a MetricsRow. NMI, ARI
// and K-MAE are NaN unless ground truth is given.
struct FitResult {
  ModelState state;
  std::vector<MetricsRow> rows;
};
FitResult fit_with_metrics(const DataMatrix& data, const std::vector<std::int32_t>* ground_truth, double alpha,
                           const NiwParams& prior, const SamplerConfig& config);

struct BenchDataset {
  std::string name;
  GmmSpec spec;
};

struct BenchSuite {
  std::vector<BenchDataset> datasets;
  std::vector<std::string> strategies{"random", "kmeans"};
  int repeats = 10;
  int iters = 200;
  int split_period = 2;
  double alpha = 1.0;
  bool merge_enabled = true;
  int initial_k = 1;
  std::uint64_t seed = 1;
  int threads = 1;   // per run
  int workers = 1;   // concurrent runs
  bool vary_data = true;  // regenerate the dataset per repeat
  PriorOverrides prior;
  std::optional<std::filesystem::path> splitnet_weights;
};

// Key-value suite file; see docs/bench_format.md. Throws Errc::InvalidConfig.
BenchSuite parse_suite(const std::string& text);
BenchSuite load_suite(const std::filesystem::path& path);

struct RunSummary {
  std::string dataset;
  std::string strategy;
  int repeat = 0;
  bool ok = false;
  std::string error;
  MetricsRow final_row;
  int splits_accepted_first50 = 0;
  std::filesystem::path trace_path;
};

// Every (dataset, strategy, repeat) run writes
// <out_dir>/<dataset>__<strategy>__r<repeat>.csv; a summary.csv with the
// final row of every run is written last. Failed runs are recorded, not thrown.
std::vector<RunSummary> run_benchmark(const BenchSuite& suite, const std::filesystem::path& out_dir);

// Seeds derived for one run; identical across worker counts.
std::uint64_t run_data_seed(const BenchSuite& suite, const BenchDataset& ds, int repeat);
std::uint64_t run_sampler_seed(const BenchSuite& suite, int repeat);

}  // namespace subsplit
