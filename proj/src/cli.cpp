#include "subsplit/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include "subsplit/bench.hpp"
#include "subsplit/csv.hpp"
#include "subsplit/datagen.hpp"
#include "subsplit/error.hpp"
#include "subsplit/metrics.hpp"
#include "subsplit/sampler.hpp"

namespace subsplit {

namespace {

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::InvalidConfig:
    case Errc::InvalidParams:
    case Errc::UnsplittablePrior:
      return kExitUsage;
    case Errc::NumericalFailure:
      return kExitNumerical;
    default:
      return kExitData;
  }
}

struct FitOptions {
  std::string data;
  double alpha = 1.0;
  double prior_kappa = 1.0;
  double prior_nu = -1.0;
  double prior_psi_scale = 1.0;
  int iters = 100;
  int split_period = 2;
  bool no_merge = false;
  std::string split_init = "kmeans";
  std::string splitnet_weights;
  int initial_k = 1;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_labels;
  std::string trace;
  std::string gt_labels;
};

struct GenOptions {
  int k = 5;
  int d = 2;
  int n = 1000;
  double alpha_dir = 10.0;
  double kappa = 0.01;
  double nu = -1.0;
  double psi_scale = 1.0;
  std::uint64_t seed = 0;
  bool splittable_pair = false;
  int n_max = 500;
  std::string out_data;
  std::string out_labels;
};

struct EvalOptions {
  std::string difficulty = "easy";
  int pairs = 50;
  int dim = 2;
  int n_max = 500;
  std::vector<std::string> strategies{"random", "kmeans"};
  std::string splitnet_weights;
  std::uint64_t seed = 0;
  std::string out;
};

struct BenchOptions {
  std::string suite;
  std::string out_dir;
  int workers = 0;
};

std::shared_ptr<const st::StWeights> load_net(const std::string& path) {
  if (path.empty()) {
    return nullptr;
  }
  return std::make_shared<const st::StWeights>(st::load_weights(path));
}

int cmd_fit(const FitOptions& o, std::ostream& out) {
  const Matrix data = read_matrix_csv(o.data);
  std::vector<std::int32_t> gt;
  if (!o.gt_labels.empty()) {
    gt = read_labels_csv(o.gt_labels);
  }
  SamplerConfig cfg;
  cfg.iters = o.iters;
  cfg.split_period = o.split_period;
  cfg.merge_enabled = !o.no_merge;
  cfg.initial_k = o.initial_k;
  cfg.rng_seed = o.seed;
  cfg.threads = o.threads;
  cfg.strategy = make_initializer(o.split_init, load_net(o.splitnet_weights));
  const NiwParams prior = default_prior(data, o.prior_kappa, o.prior_nu, o.prior_psi_scale);
  const FitResult fr = fit_with_metrics(data, gt.empty() ? nullptr : &gt, o.alpha, prior, cfg);
  if (!o.out_labels.empty()) {
    write_labels_csv(o.out_labels, fr.state.labels);
  }
  if (!o.trace.empty()) {
    write_trace_csv(o.trace, fr.rows);
  }
  out << "K=" << fr.state.num_clusters();
  if (!fr.rows.empty()) {
    out << " log_posterior=" << fr.rows.back().log_posterior;
    if (!gt.empty()) {
      out << " nmi=" << fr.rows.back().nmi << " ari=" << fr.rows.back().ari;
    }
  }
  out << '\n';
  return kExitOk;
}

int cmd_gen(const GenOptions& o, std::ostream& out) {
  const double nu = o.nu > 0.0 ? o.nu : o.d + 3.0;
  const NiwParams niw = isotropic_niw(o.d, o.kappa, nu, o.psi_scale);
  niw.validate();
  if (o.splittable_pair) {
    Rng rng = derive_rng(o.seed, 0x70616972);
    const SplitPair pair = gen_split_pair(niw, o.alpha_dir, o.n_max, std::nullopt, 1.0, rng);
    write_matrix_csv(o.out_data, pair.data.points);
    write_labels_csv(o.out_labels, pair.data.labels);
    out << "n=" << pair.data.points.rows() << " log_h=" << pair.log_h << " attempts=" << pair.attempts << '\n';
    return kExitOk;
  }
  GmmSpec spec;
  spec.k = o.k;
  spec.d = o.d;
  spec.n = o.n;
  spec.alpha_dir = o.alpha_dir;
  spec.niw = niw;
  spec.seed = o.seed;
  const LabeledData data = gen_gmm(spec);
  write_matrix_csv(o.out_data, data.points);
  write_labels_csv(o.out_labels, data.labels);
  out << "n=" << data.points.rows() << " k=" << o.k << '\n';
  return kExitOk;
}

// Generation prior per difficulty level. Smaller kappa spreads the two
// component means further apart.
NiwParams difficulty_prior(const std::string& level, int d) {
  const double nu = d + 3.0;
  if (level == "easy") {
    return isotropic_niw(d, 0.02, nu);
  }
  if (level == "medium") {
    return isotropic_niw(d, 0.15, nu);
  }
  if (level == "hard") {
    return isotropic_niw(d, 0.5, nu);
  }
  throw Error(Errc::InvalidConfig, "difficulty must be easy, medium or hard");
}

int cmd_eval_split(const EvalOptions& o, std::ostream& out) {
  const NiwParams niw = difficulty_prior(o.difficulty, o.dim);
  const auto weights = load_net(o.splitnet_weights);
  std::vector<SplitInitializer> inits;
  for (const auto& s : o.strategies) {
    inits.push_back(make_initializer(s, weights));
    inits.back().check_dim(o.dim);
  }
  std::ofstream file;
  std::ostream* sink = &out;
  if (!o.out.empty()) {
    file.open(o.out, std::ios::trunc);
    if (!file) {
      throw Error(Errc::Io, "cannot write " + o.out);
    }
    sink = &file;
  }
  std::ostream& csv = *sink;
  csv.precision(10);
  csv << "pair,n,log_h_gt";
  for (const auto& s : o.strategies) {
    csv << ',' << s << "_accuracy," << s << "_log_h";
  }
  csv << '\n';

  Rng gen_rng = derive_rng(o.seed, 0x6576616c);
  for (int p = 0; p < o.pairs; ++p) {
    const SplitPair pair = gen_split_pair(niw, 3.0, o.n_max, std::nullopt, 1.0, gen_rng);
    const Matrix& x = pair.data.points;
    const NiwParams prior = default_prior(x);
    const SuffStats whole = suffstats_from_points(x);
    std::vector<std::uint8_t> truth(pair.data.labels.begin(), pair.data.labels.end());
    csv << p << ',' << x.rows() << ',' << pair.log_h;
    for (std::size_t s = 0; s < inits.size(); ++s) {
      Rng rng = derive_rng(o.seed, static_cast<std::uint64_t>(p), s + 1);
      const SubAssignment bits = inits[s].assign(x, rng);
      SuffStats left(x.cols());
      SuffStats right(x.cols());
      for (Index i = 0; i < x.rows(); ++i) {
        (bits[static_cast<std::size_t>(i)] ? right : left).add_point(x.row(i).transpose());
      }
      left.finalize();
      right.finalize();
      const double log_h = (left.m == 0 || right.m == 0) ? -std::numeric_limits<double>::infinity()
                                                         : split_log_hastings(whole, left, right, 1.0, prior);
      csv << ',' << best_swap_accuracy(truth, bits) << ',' << log_h;
    }
    csv << '\n';
  }
  return kExitOk;
}

int cmd_bench(const BenchOptions& o, std::ostream& out) {
  BenchSuite suite = load_suite(o.suite);
  if (o.workers > 0) {
    suite.workers = o.workers;
  }
  const auto results = run_benchmark(suite, o.out_dir);
  int failed = 0;
  for (const auto& r : results) {
    failed += r.ok ? 0 : 1;
  }
  out << results.size() << " runs, " << failed << " failed; traces in " << o.out_dir << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Split/merge DPGMM sampler with pluggable subcluster initialization", "subsplit"};
  app.require_subcommand(1);

  FitOptions fit_o;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a DPGMM to a CSV data file");
  fit_cmd->add_option("--data", fit_o.data, "Headerless CSV, one point per row")->required();
  fit_cmd->add_option("--alpha", fit_o.alpha, "DP concentration")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--prior-kappa", fit_o.prior_kappa, "NIW kappa")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--prior-nu", fit_o.prior_nu, "NIW nu (default D + 3)");
  fit_cmd->add_option("--prior-psi-scale", fit_o.prior_psi_scale, "Multiplier on the data-covariance psi")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--iters", fit_o.iters, "Iterations")->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--split-period", fit_o.split_period, "Iterations between split/merge rounds")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_flag("--no-merge", fit_o.no_merge, "Disable merge proposals");
  fit_cmd->add_option("--split-init", fit_o.split_init, "Subcluster initializer")
      ->check(CLI::IsMember({"random", "kmeans", "splitnet"}));
  fit_cmd->add_option("--splitnet-weights", fit_o.splitnet_weights, "SplitNet weight file");
  fit_cmd->add_option("--initial-k", fit_o.initial_k, "Initial number of clusters")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fit_o.seed, "RNG seed");
  fit_cmd->add_option("--threads", fit_o.threads, "Worker threads")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--out-labels", fit_o.out_labels, "Write inferred labels here");
  fit_cmd->add_option("--trace", fit_o.trace, "Write the per-iteration trace CSV here");
  fit_cmd->add_option("--gt-labels", fit_o.gt_labels, "Ground-truth labels; enables NMI/ARI in the trace");

  GenOptions gen_o;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic GMM dataset");
  gen_cmd->add_option("--k", gen_o.k, "Components")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--d", gen_o.d, "Dimension")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--n", gen_o.n, "Points")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--alpha-dir", gen_o.alpha_dir, "Dirichlet concentration of the weights")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--kappa", gen_o.kappa, "NIW kappa (smaller spreads the means)")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--nu", gen_o.nu, "NIW nu (default D + 3)");
  gen_cmd->add_option("--psi-scale", gen_o.psi_scale, "Expected component covariance scale")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen_o.seed, "RNG seed");
  gen_cmd->add_flag("--splittable-pair", gen_o.splittable_pair, "Emit one two-component pair with log H > 1");
  gen_cmd->add_option("--n-max", gen_o.n_max, "Pair size scale")->check(CLI::Range(4, 100000000));
  gen_cmd->add_option("--out-data", gen_o.out_data, "Data CSV")->required();
  gen_cmd->add_option("--out-labels", gen_o.out_labels, "Label CSV")->required();

  EvalOptions eval_o;
  auto* eval_cmd = app.add_subcommand("eval-split", "Score split initializers on generated pairs");
  eval_cmd->add_option("--difficulty", eval_o.difficulty, "easy, medium or hard")
      ->check(CLI::IsMember({"easy", "medium", "hard"}));
  eval_cmd->add_option("--pairs", eval_o.pairs, "Number of pairs")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--dim", eval_o.dim, "Dimension")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--n-max", eval_o.n_max, "Pair size scale")->check(CLI::Range(4, 100000000));
  eval_cmd->add_option("--strategies", eval_o.strategies, "Comma-separated initializers")
      ->delimiter(',')
      ->check(CLI::IsMember({"random", "kmeans", "splitnet"}));
  eval_cmd->add_option("--splitnet-weights", eval_o.splitnet_weights, "SplitNet weight file");
  eval_cmd->add_option("--seed", eval_o.seed, "RNG seed");
  eval_cmd->add_option("--out", eval_o.out, "CSV output (default stdout)");

  BenchOptions bench_o;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark suite");
  bench_cmd->add_option("--suite", bench_o.suite, "Suite file")->required();
  bench_cmd->add_option("--out-dir", bench_o.out_dir, "Trace directory")->required();
  bench_cmd->add_option("--workers", bench_o.workers, "Concurrent runs (overrides the suite)")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit_cmd) {
      if (fit_o.split_init == "splitnet" && fit_o.splitnet_weights.empty()) {
        err << "--split-init splitnet requires --splitnet-weights\n" << fit_cmd->help();
        return kExitUsage;
      }
      return cmd_fit(fit_o, out);
    }
    if (*gen_cmd) {
      return cmd_gen(gen_o, out);
    }
    if (*eval_cmd) {
      for (const auto& s : eval_o.strategies) {
        if (s == "splitnet" && eval_o.splitnet_weights.empty()) {
          err << "strategy splitnet requires --splitnet-weights\n";
          return kExitUsage;
        }
      }
      return cmd_eval_split(eval_o, out);
    }
    if (*bench_cmd) {
      return cmd_bench(bench_o, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace subsplit
