#include "subsplit/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <spdlog/spdlog.h>

#include "subsplit/error.hpp"
#include "subsplit/metrics.hpp"

namespace subsplit {

namespace {

constexpr std::uint64_t kLabelPhase = 1;

// Normalized Dirichlet draw computed in log space.
Vector sample_dirichlet(const std::vector<double>& shape, Rng& rng) {
  Vector logs(static_cast<Index>(shape.size()));
  for (std::size_t i = 0; i < shape.size(); ++i) {
    logs(static_cast<Index>(i)) = log_gamma_variate(shape[i], rng);
  }
  const double peak = logs.maxCoeff();
  Vector w = (logs.array() - peak).exp();
  return w / w.sum();
}

// Index drawn from unnormalized log weights.
Index sample_log_categorical(const double* logw, Index k, Rng& rng) {
  double peak = logw[0];
  for (Index j = 1; j < k; ++j) {
    peak = std::max(peak, logw[j]);
  }
  double total = 0.0;
  for (Index j = 0; j < k; ++j) {
    total += std::exp(logw[j] - peak);
  }
  const double target = uniform01(rng) * total;
  double cumulative = 0.0;
  for (Index j = 0; j < k; ++j) {
    cumulative += std::exp(logw[j] - peak);
    if (cumulative > target) {
      return j;
    }
  }
  return k - 1;
}

template <typename Fn>
void parallel_chunks(Index n, int threads, Fn&& fn) {
  const int t = std::max(1, threads);
  if (t == 1 || n < 2 * t) {
    fn(0, Index{0}, n);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(t));
  const Index chunk = (n + t - 1) / t;
  for (int i = 0; i < t; ++i) {
    const Index begin = std::min(n, i * chunk);
    const Index end = std::min(n, begin + chunk);
    workers.emplace_back([&fn, i, begin, end] { fn(i, begin, end); });
  }
  for (auto& w : workers) {
    w.join();
  }
}

}  // namespace

void SamplerConfig::validate() const {
  if (iters < 0) {
    throw Error(Errc::InvalidConfig, "iters must be non-negative");
  }
  if (split_period < 1) {
    throw Error(Errc::InvalidConfig, "split_period must be at least 1");
  }
  if (initial_k < 1) {
    throw Error(Errc::InvalidConfig, "initial_k must be at least 1");
  }
  if (threads < 1) {
    throw Error(Errc::InvalidConfig, "threads must be at least 1");
  }
}

NiwParams default_prior(const DataMatrix& data, double kappa, double nu, double psi_scale) {
  const Index d = data.cols();
  const double n = static_cast<double>(data.rows());
  if (data.rows() < 2 || d < 1) {
    throw Error(Errc::InvalidData, "need at least two points to derive a default prior");
  }
  NiwParams prior;
  prior.mu0 = data.colwise().mean().transpose();
  prior.kappa = kappa;
  prior.nu = nu > 0.0 ? nu : static_cast<double>(d) + 3.0;
  const Matrix centered = data.rowwise() - prior.mu0.transpose();
  Matrix cov = (centered.transpose() * centered) / (n - 1.0);
  cov = 0.5 * (cov + cov.transpose());
  if (Eigen::LLT<Matrix>(cov).info() != Eigen::Success || cov.diagonal().minCoeff() <= 0.0) {
    const double ridge = std::max(1e-6 * cov.trace() / static_cast<double>(d), 1e-12);
    cov.diagonal().array() += ridge;
  }
  const double scale = std::max(prior.nu - static_cast<double>(d) - 1.0, 1e-3);
  prior.psi = cov * scale * psi_scale;
  prior.validate();
  return prior;
}

double split_log_hastings(const SuffStats& parent, const SuffStats& left, const SuffStats& right, double alpha,
                          const NiwParams& prior) {
  if (left.m < 1 || right.m < 1) {
    throw Error(Errc::EmptySubcluster, "cannot evaluate a split with an empty side");
  }
  const double side_l = std::lgamma(static_cast<double>(left.m)) + log_marginal_likelihood(prior, left);
  const double side_r = std::lgamma(static_cast<double>(right.m)) + log_marginal_likelihood(prior, right);
  // summed before anything else so that swapping the sides is bit-exact
  const double sides = side_l + side_r;
  return std::log(alpha) + sides - std::lgamma(static_cast<double>(parent.m)) -
         log_marginal_likelihood(prior, parent);
}

Sampler::Sampler(const DataMatrix& data, double alpha, NiwParams prior, SamplerConfig config)
    : data_(data), alpha_(alpha), prior_(std::move(prior)), config_(std::move(config)) {
  if (data_.rows() < 2 || data_.cols() < 1) {
    throw Error(Errc::InvalidData, "need N >= 2 points with D >= 1");
  }
  if (!data_.allFinite()) {
    throw Error(Errc::InvalidData, "data contains non-finite values");
  }
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) {
    throw Error(Errc::InvalidConfig, "alpha must be positive");
  }
  if (prior_.dim() != data_.cols()) {
    throw Error(Errc::DimensionMismatch, "prior dimension does not match data");
  }
  prior_.validate();
  config_.validate();
  config_.strategy.check_dim(data_.cols());
  rng_ = derive_rng(config_.rng_seed, 0);
}

Matrix Sampler::gather(const std::vector<Index>& rows) const {
  Matrix out(static_cast<Index>(rows.size()), data_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Index>(i)) = data_.row(rows[i]);
  }
  return out;
}

std::vector<std::vector<Index>> Sampler::members(const ModelState& state) const {
  std::vector<std::vector<Index>> out(state.clusters.size());
  for (Index i = 0; i < state.num_points(); ++i) {
    out[static_cast<std::size_t>(state.labels[static_cast<std::size_t>(i)])].push_back(i);
  }
  return out;
}

void Sampler::init_subclusters(ModelState& state, Index k, const std::vector<Index>& rows) {
  const SubAssignment bits = config_.strategy.assign(gather(rows), rng_);
  Cluster& c = state.clusters[static_cast<std::size_t>(k)];
  c.sub.stats_l = SuffStats(data_.cols());
  c.sub.stats_r = SuffStats(data_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Index row = rows[i];
    state.sublabels[static_cast<std::size_t>(row)] = bits[i];
    (bits[i] ? c.sub.stats_r : c.sub.stats_l).add_point(data_.row(row).transpose());
  }
  c.sub.stats_l.finalize();
  c.sub.stats_r.finalize();
  const Vector w = sample_dirichlet({static_cast<double>(c.sub.stats_l.m) + alpha_ / 2.0,
                                     static_cast<double>(c.sub.stats_r.m) + alpha_ / 2.0},
                                    rng_);
  c.sub.weights = {w(0), w(1)};
  c.sub.params_l = sample_niw(niw_posterior(prior_, c.sub.stats_l), rng_);
  c.sub.params_r = sample_niw(niw_posterior(prior_, c.sub.stats_r), rng_);
}

void Sampler::recompute_stats(ModelState& state) const {
  const Index k = state.num_clusters();
  const Index d = data_.cols();
  const int t = std::max(1, config_.threads);
  // partial[thread][cluster][side]
  std::vector<std::vector<std::array<SuffStats, 2>>> partial(
      static_cast<std::size_t>(t),
      std::vector<std::array<SuffStats, 2>>(static_cast<std::size_t>(k), {SuffStats(d), SuffStats(d)}));
  parallel_chunks(state.num_points(), t, [&](int thread, Index begin, Index end) {
    auto& local = partial[static_cast<std::size_t>(thread)];
    for (Index i = begin; i < end; ++i) {
      const auto label = static_cast<std::size_t>(state.labels[static_cast<std::size_t>(i)]);
      local[label][state.sublabels[static_cast<std::size_t>(i)]].add_point(data_.row(i).transpose());
    }
  });
  for (Index c = 0; c < k; ++c) {
    Cluster& cl = state.clusters[static_cast<std::size_t>(c)];
    cl.sub.stats_l = SuffStats(d);
    cl.sub.stats_r = SuffStats(d);
    for (const auto& local : partial) {
      SuffStats l = local[static_cast<std::size_t>(c)][0];
      SuffStats r = local[static_cast<std::size_t>(c)][1];
      l.finalize();
      r.finalize();
      cl.sub.stats_l += l;
      cl.sub.stats_r += r;
    }
    cl.stats = cl.sub.stats_l + cl.sub.stats_r;
  }
}

void Sampler::sample_cluster_weights(ModelState& state) {
  std::vector<double> shape;
  shape.reserve(state.clusters.size() + 1);
  for (const Cluster& c : state.clusters) {
    shape.push_back(static_cast<double>(c.stats.m));
  }
  shape.push_back(alpha_);
  const Vector w = sample_dirichlet(shape, rng_);
  // drop the remainder stick and renormalize over instantiated clusters
  state.weights = w.head(state.num_clusters()) / w.head(state.num_clusters()).sum();
}

void Sampler::remove_empty_clusters(ModelState& state) {
  const bool any_empty =
      std::any_of(state.clusters.begin(), state.clusters.end(), [](const Cluster& c) { return c.stats.m == 0; });
  if (!any_empty) {
    return;
  }
  std::vector<std::int32_t> remap(state.clusters.size(), -1);
  std::vector<Cluster> kept;
  std::vector<double> kept_w;
  for (std::size_t c = 0; c < state.clusters.size(); ++c) {
    if (state.clusters[c].stats.m > 0) {
      remap[c] = static_cast<std::int32_t>(kept.size());
      kept.push_back(std::move(state.clusters[c]));
      kept_w.push_back(c < static_cast<std::size_t>(state.weights.size()) ? state.weights(static_cast<Index>(c)) : 0.0);
    }
  }
  for (auto& label : state.labels) {
    label = remap[static_cast<std::size_t>(label)];
  }
  state.clusters = std::move(kept);
  state.weights = Eigen::Map<const Vector>(kept_w.data(), static_cast<Index>(kept_w.size()));
  const double total = state.weights.sum();
  if (total > 0.0) {
    state.weights /= total;
  } else {
    state.weights.setConstant(1.0 / static_cast<double>(state.weights.size()));
  }
}

void Sampler::sample_labels(ModelState& state, int iter) {
  const Index k = state.num_clusters();
  std::vector<GaussianDensity> dens;
  std::vector<std::array<GaussianDensity, 2>> sub_dens;
  std::vector<std::array<double, 2>> sub_logw;
  dens.reserve(static_cast<std::size_t>(k));
  for (Index c = 0; c < k; ++c) {
    const Cluster& cl = state.clusters[static_cast<std::size_t>(c)];
    dens.emplace_back(cl.params);
    sub_dens.push_back({GaussianDensity(cl.sub.params_l), GaussianDensity(cl.sub.params_r)});
    sub_logw.push_back({std::log(cl.sub.weights[0]), std::log(cl.sub.weights[1])});
  }
  const Vector log_w = state.weights.array().log();

  parallel_chunks(state.num_points(), config_.threads, [&](int thread, Index begin, Index end) {
    Rng rng = derive_rng(config_.rng_seed, static_cast<std::uint64_t>(iter), static_cast<std::uint64_t>(thread),
                         kLabelPhase);
    const Index n = end - begin;
    if (n == 0) {
      return;
    }
    // n x K log weights, row-major so each point's row is contiguous
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> logp(n, k);
    Vector column(n);
    const auto block = data_.middleRows(begin, n);
    for (Index c = 0; c < k; ++c) {
      dens[static_cast<std::size_t>(c)].log_pdf_rows(block, column);
      logp.col(c) = column.array() + log_w(c);
    }
    Vector x(data_.cols());
    for (Index i = 0; i < n; ++i) {
      const Index z = k == 1 ? 0 : sample_log_categorical(logp.row(i).data(), k, rng);
      const std::size_t row = static_cast<std::size_t>(begin + i);
      state.labels[row] = static_cast<std::int32_t>(z);
      x = data_.row(begin + i).transpose();
      const auto& sd = sub_dens[static_cast<std::size_t>(z)];
      const auto& sw = sub_logw[static_cast<std::size_t>(z)];
      const std::array<double, 2> sub_logp{sw[0] + sd[0].log_pdf(x), sw[1] + sd[1].log_pdf(x)};
      state.sublabels[row] = static_cast<std::uint8_t>(sample_log_categorical(sub_logp.data(), 2, rng));
    }
  });
}

void Sampler::repair_empty_subclusters(ModelState& state) {
  std::vector<Index> broken;
  for (Index c = 0; c < state.num_clusters(); ++c) {
    const Cluster& cl = state.clusters[static_cast<std::size_t>(c)];
    if (cl.sub.stats_l.m == 0 || cl.sub.stats_r.m == 0) {
      broken.push_back(c);
    }
  }
  if (broken.empty()) {
    return;
  }
  const auto rows = members(state);
  for (Index c : broken) {
    Cluster& cl = state.clusters[static_cast<std::size_t>(c)];
    // the empty side gets a fresh draw from the bare prior
    if (cl.sub.stats_l.m == 0) {
      cl.sub.params_l = sample_niw(prior_, rng_);
    }
    if (cl.sub.stats_r.m == 0) {
      cl.sub.params_r = sample_niw(prior_, rng_);
    }
    cl.sub.stats_l = SuffStats(data_.cols());
    cl.sub.stats_r = SuffStats(data_.cols());
    for (Index row : rows[static_cast<std::size_t>(c)]) {
      const std::uint8_t side = uniform01(rng_) < cl.sub.weights[1] ? kRight : kLeft;
      state.sublabels[static_cast<std::size_t>(row)] = side;
      (side == kRight ? cl.sub.stats_r : cl.sub.stats_l).add_point(data_.row(row).transpose());
    }
    cl.sub.stats_l.finalize();
    cl.sub.stats_r.finalize();
  }
}

ModelState Sampler::state_from_labels(const std::vector<std::int32_t>& labels) {
  if (static_cast<Index>(labels.size()) != data_.rows()) {
    throw Error(Errc::InvalidData, "label vector length does not match data");
  }
  ModelState state;
  state.alpha = alpha_;
  state.prior = prior_;
  const std::int32_t k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  if (k < 1 || *std::min_element(labels.begin(), labels.end()) < 0) {
    throw Error(Errc::InvalidData, "labels must be non-negative");
  }
  state.labels = labels;
  state.sublabels.assign(labels.size(), kLeft);
  state.clusters.resize(static_cast<std::size_t>(k));
  for (auto& c : state.clusters) {
    c.stats = SuffStats(data_.cols());
  }
  for (Index i = 0; i < data_.rows(); ++i) {
    state.clusters[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].stats.m += 1;
  }
  state.weights = Vector::Constant(k, 1.0 / k);
  remove_empty_clusters(state);

  const auto rows = members(state);
  for (Index c = 0; c < state.num_clusters(); ++c) {
    init_subclusters(state, c, rows[static_cast<std::size_t>(c)]);
  }
  recompute_stats(state);
  for (Cluster& c : state.clusters) {
    c.params = sample_niw(niw_posterior(prior_, c.stats), rng_);
  }
  sample_cluster_weights(state);
  return state;
}

ModelState Sampler::init_state() {
  if (data_.rows() < config_.initial_k) {
    throw Error(Errc::InvalidConfig, "fewer points than initial clusters");
  }
  std::vector<std::int32_t> labels(static_cast<std::size_t>(data_.rows()));
  const auto k = static_cast<std::uint64_t>(config_.initial_k);
  for (auto& label : labels) {
    label = static_cast<std::int32_t>(k == 1 ? 0 : rng_() % k);
  }
  return state_from_labels(labels);
}

void Sampler::restricted_gibbs_iteration(ModelState& state, int iter) {
  sample_cluster_weights(state);
  for (std::size_t c = 0; c < state.clusters.size(); ++c) {
    Cluster& cl = state.clusters[c];
    try {
      cl.params = sample_niw(niw_posterior(prior_, cl.stats), rng_);
      const Vector w = sample_dirichlet({static_cast<double>(cl.sub.stats_l.m) + alpha_ / 2.0,
                                         static_cast<double>(cl.sub.stats_r.m) + alpha_ / 2.0},
                                        rng_);
      cl.sub.weights = {w(0), w(1)};
      cl.sub.params_l = sample_niw(niw_posterior(prior_, cl.sub.stats_l), rng_);
      cl.sub.params_r = sample_niw(niw_posterior(prior_, cl.sub.stats_r), rng_);
    } catch (const Error& e) {
      if (e.code() == Errc::NumericalFailure) {
        throw Error(Errc::NumericalFailure, "cluster " + std::to_string(c) + ": " + e.what());
      }
      throw;
    }
  }
  sample_labels(state, iter);
  recompute_stats(state);
  remove_empty_clusters(state);
  repair_empty_subclusters(state);
}

SplitProposal Sampler::current_split(const ModelState& state, Index k) const {
  const Cluster& c = state.clusters[static_cast<std::size_t>(k)];
  SplitProposal p;
  p.cluster_index = k;
  for (Index i = 0; i < state.num_points(); ++i) {
    if (state.labels[static_cast<std::size_t>(i)] == k) {
      p.assignment.push_back(state.sublabels[static_cast<std::size_t>(i)]);
    }
  }
  p.log_h = (c.sub.stats_l.m == 0 || c.sub.stats_r.m == 0)
                ? -std::numeric_limits<double>::infinity()
                : split_log_hastings(c.stats, c.sub.stats_l, c.sub.stats_r, alpha_, prior_);
  return p;
}

Index Sampler::apply_split(ModelState& state, Index k) {
  const Index j = state.num_clusters();
  Cluster& parent = state.clusters[static_cast<std::size_t>(k)];
  if (parent.sub.stats_l.m == 0 || parent.sub.stats_r.m == 0) {
    throw Error(Errc::EmptySubcluster, "cannot split cluster " + std::to_string(k));
  }
  const std::array<double, 2> sub_w = parent.sub.weights;
  const double w = state.weights(k);

  Cluster right;
  right.stats = parent.sub.stats_r;
  parent.stats = parent.sub.stats_l;

  std::vector<Index> rows_l;
  std::vector<Index> rows_r;
  for (Index i = 0; i < state.num_points(); ++i) {
    if (state.labels[static_cast<std::size_t>(i)] != k) {
      continue;
    }
    if (state.sublabels[static_cast<std::size_t>(i)] == kRight) {
      state.labels[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(j);
      rows_r.push_back(i);
    } else {
      rows_l.push_back(i);
    }
  }
  state.clusters.push_back(std::move(right));
  state.weights.conservativeResize(j + 1);
  state.weights(k) = w * sub_w[0];
  state.weights(j) = w * sub_w[1];

  for (Index c : {k, j}) {
    Cluster& cl = state.clusters[static_cast<std::size_t>(c)];
    cl.params = sample_niw(niw_posterior(prior_, cl.stats), rng_);
    init_subclusters(state, c, c == k ? rows_l : rows_r);
  }
  return j;
}

std::vector<Index> Sampler::propose_splits(ModelState& state) {
  const Index k0 = state.num_clusters();
  std::vector<Index> accepted;
  for (Index k = 0; k < k0; ++k) {
    const Cluster& c = state.clusters[static_cast<std::size_t>(k)];
    if (c.sub.stats_l.m == 0 || c.sub.stats_r.m == 0) {
      continue;  // auto-reject
    }
    const double log_h = split_log_hastings(c.stats, c.sub.stats_l, c.sub.stats_r, alpha_, prior_);
    const double u = uniform01(rng_);
    if (std::log(u) < log_h) {
      accepted.push_back(k);
    }
  }
  for (Index k : accepted) {
    apply_split(state, k);
  }
  return accepted;
}

namespace {

// Merge j into i without compacting; j is left empty.
void merge_into(ModelState& state, Index i, Index j, const NiwParams& prior, double /*alpha*/, Rng& rng) {
  Cluster& ci = state.clusters[static_cast<std::size_t>(i)];
  Cluster& cj = state.clusters[static_cast<std::size_t>(j)];
  const double ni = static_cast<double>(ci.stats.m);
  const double nj = static_cast<double>(cj.stats.m);
  for (std::size_t p = 0; p < state.labels.size(); ++p) {
    if (state.labels[p] == i) {
      state.sublabels[p] = kLeft;
    } else if (state.labels[p] == j) {
      state.labels[p] = static_cast<std::int32_t>(i);
      state.sublabels[p] = kRight;
    }
  }
  SubclusterPair sub;
  sub.params_l = ci.params;
  sub.params_r = cj.params;
  sub.stats_l = ci.stats;
  sub.stats_r = cj.stats;
  sub.weights = {ni / (ni + nj), nj / (ni + nj)};
  ci.stats = sub.stats_l + sub.stats_r;
  ci.sub = std::move(sub);
  ci.params = sample_niw(niw_posterior(prior, ci.stats), rng);
  state.weights(i) += state.weights(j);
  state.weights(j) = 0.0;
  cj.stats = SuffStats(ci.stats.dim());
  cj.sub.stats_l = SuffStats(ci.stats.dim());
  cj.sub.stats_r = SuffStats(ci.stats.dim());
}

}  // namespace

void Sampler::apply_merge(ModelState& state, Index i, Index j) {
  if (i == j) {
    throw std::invalid_argument("cannot merge a cluster with itself");
  }
  merge_into(state, std::min(i, j), std::max(i, j), prior_, alpha_, rng_);
  remove_empty_clusters(state);
}

std::vector<std::pair<Index, Index>> Sampler::propose_merges(ModelState& state, std::vector<Index> candidates) {
  std::vector<std::pair<Index, Index>> accepted;
  if (state.num_clusters() < 2) {
    return accepted;
  }
  if (candidates.empty()) {
    candidates.resize(static_cast<std::size_t>(state.num_clusters()));
    std::iota(candidates.begin(), candidates.end(), Index{0});
  }
  std::shuffle(candidates.begin(), candidates.end(), rng_);
  for (std::size_t p = 0; p + 1 < candidates.size(); p += 2) {
    const Index a = std::min(candidates[p], candidates[p + 1]);
    const Index b = std::max(candidates[p], candidates[p + 1]);
    const SuffStats& sa = state.clusters[static_cast<std::size_t>(a)].stats;
    const SuffStats& sb = state.clusters[static_cast<std::size_t>(b)].stats;
    const double log_h_merge = -split_log_hastings(sa + sb, sa, sb, alpha_, prior_);
    const double u = uniform01(rng_);
    if (std::log(u) < log_h_merge) {
      accepted.emplace_back(a, b);
    }
  }
  for (const auto& [a, b] : accepted) {
    merge_into(state, a, b, prior_, alpha_, rng_);
  }
  if (!accepted.empty()) {
    remove_empty_clusters(state);
  }
  return accepted;
}

void Sampler::check_invariants(const ModelState& state) const {
  const Index k = state.num_clusters();
  if (state.num_points() != data_.rows() || state.sublabels.size() != state.labels.size()) {
    throw std::logic_error("label vectors do not cover the data");
  }
  if (state.weights.size() != k) {
    throw std::logic_error("weight vector length differs from K");
  }
  if (k > 0 && std::abs(state.weights.sum() - 1.0) > 1e-9) {
    throw std::logic_error("cluster weights do not sum to 1");
  }
  std::vector<Index> count(static_cast<std::size_t>(k), 0);
  std::vector<std::array<Index, 2>> sub_count(static_cast<std::size_t>(k), {0, 0});
  for (std::size_t i = 0; i < state.labels.size(); ++i) {
    const auto z = state.labels[i];
    if (z < 0 || z >= k) {
      throw std::logic_error("label " + std::to_string(z) + " does not index a live cluster");
    }
    if (state.sublabels[i] > 1) {
      throw std::logic_error("sublabel out of range");
    }
    ++count[static_cast<std::size_t>(z)];
    ++sub_count[static_cast<std::size_t>(z)][state.sublabels[i]];
  }
  Index total = 0;
  for (Index c = 0; c < k; ++c) {
    const Cluster& cl = state.clusters[static_cast<std::size_t>(c)];
    const auto cu = static_cast<std::size_t>(c);
    if (cl.stats.m < 1) {
      throw std::logic_error("cluster " + std::to_string(c) + " is empty");
    }
    if (cl.stats.m != count[cu]) {
      throw std::logic_error("cluster " + std::to_string(c) + " count mismatch");
    }
    if (cl.sub.stats_l.m != sub_count[cu][0] || cl.sub.stats_r.m != sub_count[cu][1]) {
      throw std::logic_error("cluster " + std::to_string(c) + " subcluster count mismatch");
    }
    if (std::abs(cl.sub.weights[0] + cl.sub.weights[1] - 1.0) > 1e-9 || cl.sub.weights[0] <= 0.0 ||
        cl.sub.weights[1] <= 0.0) {
      throw std::logic_error("cluster " + std::to_string(c) + " subcluster weights invalid");
    }
    total += cl.stats.m;
  }
  if (total != data_.rows()) {
    throw std::logic_error("cluster counts do not sum to N");
  }
}

std::pair<ModelState, IterationTrace> Sampler::fit(const Observer& observer) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  ModelState state = init_state();
  IterationTrace trace;
  trace.reserve(static_cast<std::size_t>(config_.iters));
  for (int it = 1; it <= config_.iters; ++it) {
    IterationRecord rec;
    rec.iter = it;
    try {
      restricted_gibbs_iteration(state, it);
      if (it % config_.split_period == 0) {
        rec.splits_proposed = static_cast<int>(state.num_clusters());
        const Index k_before = state.num_clusters();
        const auto splits = propose_splits(state);
        rec.splits_accepted = static_cast<int>(splits.size());
        if (config_.merge_enabled) {
          // clusters touched by this round's splits sit out the merge pass
          std::vector<bool> touched(static_cast<std::size_t>(state.num_clusters()), false);
          for (Index k : splits) {
            touched[static_cast<std::size_t>(k)] = true;
          }
          for (Index k = k_before; k < state.num_clusters(); ++k) {
            touched[static_cast<std::size_t>(k)] = true;
          }
          std::vector<Index> candidates;
          for (Index k = 0; k < state.num_clusters(); ++k) {
            if (!touched[static_cast<std::size_t>(k)]) {
              candidates.push_back(k);
            }
          }
          rec.merges_proposed = static_cast<int>(candidates.size() / 2);
          if (candidates.size() >= 2) {
            rec.merges_accepted = static_cast<int>(propose_merges(state, std::move(candidates)).size());
          }
        }
      }
    } catch (const Error& e) {
      if (e.code() == Errc::NumericalFailure) {
        throw Error(Errc::NumericalFailure, "iteration " + std::to_string(it) + ": " + e.what());
      }
      throw;
    }
    rec.k = state.num_clusters();
    rec.log_posterior = log_posterior(state);
    rec.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    spdlog::debug("iter {} K={} LP={:.3f} splits {}/{} merges {}/{}", it, rec.k, rec.log_posterior,
               rec.splits_accepted, rec.splits_proposed, rec.merges_accepted, rec.merges_proposed);
    if (observer) {
      observer(state, rec);
    }
    trace.push_back(rec);
  }
  return {std::move(state), std::move(trace)};
}

std::pair<ModelState, IterationTrace> fit(const DataMatrix& data, double alpha, const NiwParams& prior,
                                          const SamplerConfig& config, const Sampler::Observer& observer) {
  Sampler sampler(data, alpha, prior, config);
  return sampler.fit(observer);
}

}  // namespace subsplit
