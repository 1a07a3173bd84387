#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "subsplit/niw.hpp"
#include "subsplit/split_init.hpp"

namespace subsplit {

// Row-per-point data matrix (N x D).
using DataMatrix = Matrix;

enum Side : std::uint8_t { kLeft = 0, kRight = 1 };

struct SubclusterPair {
  GaussianParams params_l;
  GaussianParams params_r;
  std::array<double, 2> weights{0.5, 0.5};
  SuffStats stats_l;
  SuffStats stats_r;
};

struct Cluster {
  GaussianParams params;
  SuffStats stats;
  SubclusterPair sub;
};

struct ModelState {
  std::vector<Cluster> clusters;
  Vector weights;                      // over instantiated clusters, sums to 1
  std::vector<std::int32_t> labels;    // cluster index per point
  std::vector<std::uint8_t> sublabels; // Side per point
  double alpha = 1.0;
  NiwParams prior;

  Index num_clusters() const { return static_cast<Index>(clusters.size()); }
  Index num_points() const { return static_cast<Index>(labels.size()); }
};

struct SamplerConfig {
  int iters = 100;
  int split_period = 2;
  bool merge_enabled = true;
  int initial_k = 1;
  std::uint64_t rng_seed = 0;
  int threads = 1;
  SplitInitializer strategy;

  void validate() const;
};

struct SplitProposal {
  Index cluster_index = 0;
  SubAssignment assignment;
  double log_h = 0.0;
};

struct IterationRecord {
  int iter = 0;
  Index k = 0;
  double log_posterior = 0.0;
  double elapsed_ms = 0.0;  // since fit() started
  int splits_proposed = 0;
  int splits_accepted = 0;
  int merges_proposed = 0;
  int merges_accepted = 0;
};

using IterationTrace = std::vector<IterationRecord>;

// Weak default prior: mu0 = data mean, kappa = 1, nu = D + 3,
// psi = data covariance * (nu - D - 1) * psi_scale.
NiwParams default_prior(const DataMatrix& data, double kappa = 1.0, double nu = -1.0, double psi_scale = 1.0);

// log alpha + log G(N_l) + logml(l) + log G(N_r) + logml(r) - log G(N) - logml(parent).
// Throws Errc::EmptySubcluster when either side is empty.
double split_log_hastings(const SuffStats& parent, const SuffStats& left, const SuffStats& right, double alpha,
                          const NiwParams& prior);

// Owns the data view, configuration and random state of one chain.
class Sampler {
 public:
  Sampler(const DataMatrix& data, double alpha, NiwParams prior, SamplerConfig config);

  // Fresh state: initial_k uniform random clusters, subclusters from the
  // configured strategy, parameters from their NIW posteriors.
  ModelState init_state();

  // Builds a state from given labels; subclusters come from the strategy.
  ModelState state_from_labels(const std::vector<std::int32_t>& labels);

  // One restricted Gibbs sweep; K never grows.
  void restricted_gibbs_iteration(ModelState& state, int iter);

  // Proposes splitting every cluster into its subclusters; returns the
  // indices (before relabeling) of accepted clusters.
  std::vector<Index> propose_splits(ModelState& state);

  // One pass of random disjoint pairing among `candidates` (all clusters
  // when empty). Returns accepted pairs as indices before compaction.
  std::vector<std::pair<Index, Index>> propose_merges(ModelState& state, std::vector<Index> candidates = {});

  // Forced split of cluster `k` along its current subclusters; returns the
  // index of the new cluster.
  Index apply_split(ModelState& state, Index k);
  // Forced merge of clusters i and j; the merged cluster takes the lower
  // index and the subclusters become the former clusters.
  void apply_merge(ModelState& state, Index i, Index j);

  SplitProposal current_split(const ModelState& state, Index k) const;

  using Observer = std::function<void(const ModelState&, const IterationRecord&)>;
  std::pair<ModelState, IterationTrace> fit(const Observer& observer = {});

  // Throws std::logic_error describing the first violated invariant.
  void check_invariants(const ModelState& state) const;

  const DataMatrix& data() const { return data_; }
  const SamplerConfig& config() const { return config_; }
  Rng& rng() { return rng_; }

 private:
  Matrix gather(const std::vector<Index>& rows) const;
  std::vector<std::vector<Index>> members(const ModelState& state) const;
  void init_subclusters(ModelState& state, Index k, const std::vector<Index>& rows);
  void recompute_stats(ModelState& state) const;
  void sample_cluster_weights(ModelState& state);
  void remove_empty_clusters(ModelState& state);
  void sample_labels(ModelState& state, int iter);
  void repair_empty_subclusters(ModelState& state);

  const DataMatrix& data_;
  double alpha_;
  NiwParams prior_;
  SamplerConfig config_;
  Rng rng_;
};

// Convenience wrapper for the whole run.
std::pair<ModelState, IterationTrace> fit(const DataMatrix& data, double alpha, const NiwParams& prior,
                                          const SamplerConfig& config,
                                          const Sampler::Observer& observer = {});

}  // namespace subsplit
