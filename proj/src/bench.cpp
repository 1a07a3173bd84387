#include "subsplit/bench.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "subsplit/csv.hpp"
#include "subsplit/error.hpp"

namespace subsplit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) {
      throw std::invalid_argument(v);
    }
    return d;
  } catch (const std::exception&) {
    throw Error(Errc::InvalidConfig, "key '" + key + "' expects a number, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 1e9) {
    throw Error(Errc::InvalidConfig, "key '" + key + "' expects an integer, got '" + v + "'");
  }
  return static_cast<int>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") {
    return true;
  }
  if (v == "false" || v == "0" || v == "no") {
    return false;
  }
  throw Error(Errc::InvalidConfig, "key '" + key + "' expects true/false, got '" + v + "'");
}

// CSV field with embedded quotes doubled.
std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    out += c;
    if (c == '"') out += '"';
  }
  return out + '"';
}

struct DatasetKnobs {
  std::string name;
  int k = 10;
  int d = 2;
  int n = 1000;
  double alpha_dir = 10.0;
  double kappa = 0.01;
  double nu = 10.0;
  double psi_scale = 1.0;
  std::uint64_t data_seed = 0;

  BenchDataset build() const {
    BenchDataset ds;
    ds.name = name;
    ds.spec.k = k;
    ds.spec.d = d;
    ds.spec.n = n;
    ds.spec.alpha_dir = alpha_dir;
    ds.spec.niw = isotropic_niw(d, kappa, nu, psi_scale);
    ds.spec.seed = data_seed;
    ds.spec.validate();
    return ds;
  }
};

}  // namespace

FitResult fit_with_metrics(const DataMatrix& data, const std::vector<std::int32_t>* ground_truth, double alpha,
                           const NiwParams& prior, const SamplerConfig& config) {
  if (ground_truth != nullptr && static_cast<Index>(ground_truth->size()) != data.rows()) {
    throw Error(Errc::InvalidData, "ground-truth label count does not match data");
  }
  double k_true = kNaN;
  if (ground_truth != nullptr) {
    std::vector<std::int32_t> distinct(*ground_truth);
    std::sort(distinct.begin(), distinct.end());
    k_true = static_cast<double>(std::unique(distinct.begin(), distinct.end()) - distinct.begin());
  }
  FitResult result;
  auto observer = [&](const ModelState& state, const IterationRecord& rec) {
    MetricsRow row;
    row.iter = rec.iter;
    row.k_inferred = rec.k;
    row.log_posterior = rec.log_posterior;
    row.elapsed_ms = rec.elapsed_ms;
    row.splits_accepted = rec.splits_accepted;
    row.merges_accepted = rec.merges_accepted;
    if (ground_truth != nullptr) {
      row.nmi = nmi(*ground_truth, state.labels);
      row.ari = ari(*ground_truth, state.labels);
      row.k_mae = std::abs(static_cast<double>(rec.k) - k_true);
    } else {
      row.nmi = row.ari = row.k_mae = kNaN;
    }
    result.rows.push_back(row);
  };
  auto [state, trace] = fit(data, alpha, prior, config, observer);
  result.state = std::move(state);
  return result;
}

BenchSuite parse_suite(const std::string& text) {
  BenchSuite suite;
  std::vector<DatasetKnobs> knobs;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']' || line.rfind("[dataset", 0) != 0) {
        throw Error(Errc::InvalidConfig, "line " + std::to_string(line_no) + ": expected [dataset NAME]");
      }
      DatasetKnobs ds;
      ds.name = trim(line.substr(8, line.size() - 9));
      if (ds.name.empty()) {
        throw Error(Errc::InvalidConfig, "line " + std::to_string(line_no) + ": dataset needs a name");
      }
      ds.data_seed = 1000 + knobs.size();
      knobs.push_back(ds);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::InvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!knobs.empty()) {
      DatasetKnobs& ds = knobs.back();
      if (key == "k") ds.k = to_int(key, value);
      else if (key == "d") ds.d = to_int(key, value);
      else if (key == "n") ds.n = to_int(key, value);
      else if (key == "alpha_dir") ds.alpha_dir = to_double(key, value);
      else if (key == "kappa") ds.kappa = to_double(key, value);
      else if (key == "nu") ds.nu = to_double(key, value);
      else if (key == "psi_scale") ds.psi_scale = to_double(key, value);
      else if (key == "data_seed") ds.data_seed = static_cast<std::uint64_t>(to_int(key, value));
      else throw Error(Errc::InvalidConfig, "line " + std::to_string(line_no) + ": unknown dataset key '" + key + "'");
      continue;
    }
    if (key == "strategies") {
      suite.strategies.clear();
      std::istringstream parts(value);
      std::string part;
      while (std::getline(parts, part, ',')) {
        part = trim(part);
        if (part != "random" && part != "kmeans" && part != "splitnet") {
          throw Error(Errc::InvalidConfig, "unknown strategy '" + part + "'");
        }
        suite.strategies.push_back(part);
      }
    } else if (key == "repeats") suite.repeats = to_int(key, value);
    else if (key == "iters") suite.iters = to_int(key, value);
    else if (key == "split_period") suite.split_period = to_int(key, value);
    else if (key == "alpha") suite.alpha = to_double(key, value);
    else if (key == "merge") suite.merge_enabled = to_bool(key, value);
    else if (key == "initial_k") suite.initial_k = to_int(key, value);
    else if (key == "seed") suite.seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "threads") suite.threads = to_int(key, value);
    else if (key == "workers") suite.workers = to_int(key, value);
    else if (key == "vary_data") suite.vary_data = to_bool(key, value);
    else if (key == "prior_kappa") suite.prior.kappa = to_double(key, value);
    else if (key == "prior_nu") suite.prior.nu = to_double(key, value);
    else if (key == "prior_psi_scale") suite.prior.psi_scale = to_double(key, value);
    else if (key == "splitnet_weights") suite.splitnet_weights = value;
    else throw Error(Errc::InvalidConfig, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  for (const DatasetKnobs& k : knobs) {
    suite.datasets.push_back(k.build());
  }
  if (suite.datasets.empty()) {
    throw Error(Errc::InvalidConfig, "suite defines no [dataset] sections");
  }
  if (suite.repeats < 1 || suite.iters < 1 || suite.split_period < 1 || suite.threads < 1 || suite.workers < 1 ||
      !(suite.alpha > 0.0) || suite.strategies.empty()) {
    throw Error(Errc::InvalidConfig, "suite settings out of range");
  }
  for (const auto& s : suite.strategies) {
    if (s == "splitnet" && !suite.splitnet_weights) {
      throw Error(Errc::InvalidConfig, "strategy splitnet requires splitnet_weights");
    }
  }
  return suite;
}

BenchSuite load_suite(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::Io, "cannot open suite file " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_suite(buf.str());
}

std::uint64_t run_data_seed(const BenchSuite& suite, const BenchDataset& ds, int repeat) {
  return suite.vary_data ? mix64(ds.spec.seed ^ mix64(static_cast<std::uint64_t>(repeat))) : ds.spec.seed;
}

std::uint64_t run_sampler_seed(const BenchSuite& suite, int repeat) {
  return mix64(suite.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(repeat));
}

std::vector<RunSummary> run_benchmark(const BenchSuite& suite, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::shared_ptr<const st::StWeights> weights;
  if (suite.splitnet_weights) {
    weights = std::make_shared<const st::StWeights>(st::load_weights(*suite.splitnet_weights));
  }

  struct Job {
    std::size_t dataset;
    std::size_t strategy;
    int repeat;
  };
  std::vector<Job> jobs;
  for (std::size_t d = 0; d < suite.datasets.size(); ++d) {
    for (std::size_t s = 0; s < suite.strategies.size(); ++s) {
      for (int r = 0; r < suite.repeats; ++r) {
        jobs.push_back({d, s, r});
      }
    }
  }
  std::vector<RunSummary> results(jobs.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const Job& job = jobs[j];
      const BenchDataset& ds = suite.datasets[job.dataset];
      const std::string& strategy = suite.strategies[job.strategy];
      RunSummary& out = results[j];
      out.dataset = ds.name;
      out.strategy = strategy;
      out.repeat = job.repeat;
      out.trace_path = out_dir / (ds.name + "__" + strategy + "__r" + std::to_string(job.repeat) + ".csv");
      try {
        GmmSpec spec = ds.spec;
        spec.seed = run_data_seed(suite, ds, job.repeat);
        const LabeledData data = gen_gmm(spec);
        const NiwParams prior =
            default_prior(data.points, suite.prior.kappa, suite.prior.nu, suite.prior.psi_scale);
        SamplerConfig cfg;
        cfg.iters = suite.iters;
        cfg.split_period = suite.split_period;
        cfg.merge_enabled = suite.merge_enabled;
        cfg.initial_k = suite.initial_k;
        cfg.rng_seed = run_sampler_seed(suite, job.repeat);
        cfg.threads = suite.threads;
        cfg.strategy = make_initializer(strategy, weights);
        FitResult fr = fit_with_metrics(data.points, &data.labels, suite.alpha, prior, cfg);
        write_trace_csv(out.trace_path, fr.rows);
        out.final_row = fr.rows.back();
        for (const MetricsRow& row : fr.rows) {
          if (row.iter <= 50) {
            out.splits_accepted_first50 += row.splits_accepted;
          }
        }
        out.ok = true;
      } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
        spdlog::warn("run {} / {} / r{} failed: {}", ds.name, strategy, job.repeat, e.what());
      }
    }
  };

  const int pool = std::max(1, std::min<int>(suite.workers, static_cast<int>(jobs.size())));
  if (pool == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < pool; ++i) {
      threads.emplace_back(worker);
    }
    for (auto& t : threads) {
      t.join();
    }
  }

  std::ofstream summary(out_dir / "summary.csv", std::ios::trunc);
  if (!summary) {
    throw Error(Errc::Io, "cannot write summary.csv");
  }
  summary << "dataset,strategy,repeat,status,iter,k_inferred,log_posterior,nmi,ari,k_mae,elapsed_ms,"
             "splits_accepted_first50,error\n";
  summary.precision(17);
  for (const RunSummary& r : results) {
    const MetricsRow& m = r.final_row;
    summary << r.dataset << ',' << r.strategy << ',' << r.repeat << ',' << (r.ok ? "ok" : "failed") << ',' << m.iter
            << ',' << m.k_inferred << ',' << m.log_posterior << ',' << m.nmi << ',' << m.ari << ',' << m.k_mae << ','
            << m.elapsed_ms << ',' << r.splits_accepted_first50 << ',' << quoted(r.error) << '\n';
  }
  return results;
}

}  // namespace subsplit
