#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "subsplit/niw.hpp"

namespace subsplit {

struct GmmSpec {
  int k = 1;
  int d = 2;
  int n = 1000;
  double alpha_dir = 10.0;
  NiwParams niw;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LabeledData {
  Matrix points;                     // N x D
  std::vector<std::int32_t> labels;  // ground-truth component per row
};

// Isotropic generation prior: mu0 = 0, psi = psi_scale * (nu - D - 1) * I so
// that E[Sigma] = psi_scale * I. Small kappa spreads the component means.
NiwParams isotropic_niw(int d, double kappa, double nu, double psi_scale = 1.0);

// Finite GMM draw: weights ~ Dir(alpha_dir), n_j = ceil(p_j n) trimmed from
// the largest component, (mu_j, Sigma_j) ~ NIW. Rows are grouped by component.
LabeledData gen_gmm(const GmmSpec& spec);

struct SplitPair {
  LabeledData data;  // labels are [0 .. 0, 1 .. 1]
  double log_h = 0.0;
  int attempts = 0;
};

// Two-component draw that passes the splittability filter: regenerated until
// the ground-truth split has log Hastings ratio > 1 under `prior_for_h`
// (default: the data-derived weak prior), at most 100 attempts.
// Throws Errc::UnsplittablePrior when every attempt fails.
SplitPair gen_split_pair(const NiwParams& niw, double alpha_dir, int n_max, const std::optional<NiwParams>& prior_for_h,
                         double alpha, Rng& rng);

}  // namespace subsplit
