#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "subsplit/sampler.hpp"

namespace subsplit {

// Normalized mutual information, arithmetic-mean normalization. Two constant
// labelings score 1 when they induce the same partition, 0 otherwise.
double nmi(std::span<const std::int32_t> a, std::span<const std::int32_t> b);

// Adjusted Rand index from the contingency table.
double ari(std::span<const std::int32_t> a, std::span<const std::int32_t> b);

// Accuracy of a binary partition maximized over the two label mappings.
double best_swap_accuracy(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predicted);

// Collapsed CRP partition posterior up to a constant:
// K log a + sum_k [log G(N_k) + logml(prior, stats_k)] + log G(a) - log G(a + N).
double log_posterior(const ModelState& state);

struct MetricsRow {
  int iter = 0;
  Index k_inferred = 0;
  double log_posterior = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
  double k_mae = 0.0;
  double elapsed_ms = 0.0;
  int splits_accepted = 0;
  int merges_accepted = 0;
};

}  // namespace subsplit
