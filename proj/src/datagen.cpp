#include "subsplit/datagen.hpp"

#include <algorithm>
#include <cmath>

#include "subsplit/error.hpp"
#include "subsplit/sampler.hpp"

namespace subsplit {

namespace {

Vector dirichlet(int k, double concentration, Rng& rng) {
  Vector logs(k);
  for (int j = 0; j < k; ++j) {
    logs(j) = log_gamma_variate(concentration, rng);
  }
  Vector w = (logs.array() - logs.maxCoeff()).exp();
  return w / w.sum();
}

void sample_points(const GaussianParams& g, Index count, Rng& rng, Matrix& out, Index offset) {
  const Eigen::LLT<Matrix> llt(g.sigma);
  const Matrix chol = llt.matrixL();
  Vector z(g.dim());
  for (Index i = 0; i < count; ++i) {
    for (Index j = 0; j < z.size(); ++j) {
      z(j) = standard_normal(rng);
    }
    out.row(offset + i) = (g.mu + chol * z).transpose();
  }
}

}  // namespace

void GmmSpec::validate() const {
  if (k < 1 || d < 1 || n < k) {
    throw Error(Errc::InvalidConfig, "GMM spec needs k >= 1, d >= 1 and n >= k");
  }
  if (!(alpha_dir > 0.0)) {
    throw Error(Errc::InvalidConfig, "alpha_dir must be positive");
  }
  if (niw.dim() != d) {
    throw Error(Errc::InvalidConfig, "NIW dimension does not match d");
  }
  niw.validate();
}

NiwParams isotropic_niw(int d, double kappa, double nu, double psi_scale) {
  NiwParams p;
  p.mu0 = Vector::Zero(d);
  p.kappa = kappa;
  p.nu = nu;
  p.psi = Matrix::Identity(d, d) * psi_scale * std::max(nu - d - 1.0, 1e-3);
  return p;
}

LabeledData gen_gmm(const GmmSpec& spec) {
  spec.validate();
  Rng rng = derive_rng(spec.seed, 0x67656e);
  const Vector p = dirichlet(spec.k, spec.alpha_dir, rng);
  std::vector<Index> counts(static_cast<std::size_t>(spec.k));
  Index total = 0;
  for (int j = 0; j < spec.k; ++j) {
    counts[static_cast<std::size_t>(j)] =
        std::max<Index>(1, static_cast<Index>(std::ceil(p(j) * static_cast<double>(spec.n))));
    total += counts[static_cast<std::size_t>(j)];
  }
  while (total > spec.n) {
    // trim the overshoot from the largest component
    auto largest = std::max_element(counts.begin(), counts.end());
    --*largest;
    --total;
  }

  LabeledData out;
  out.points.resize(spec.n, spec.d);
  out.labels.reserve(static_cast<std::size_t>(spec.n));
  Index offset = 0;
  for (int j = 0; j < spec.k; ++j) {
    const GaussianParams g = sample_niw(spec.niw, rng);
    const Index c = counts[static_cast<std::size_t>(j)];
    sample_points(g, c, rng, out.points, offset);
    out.labels.insert(out.labels.end(), static_cast<std::size_t>(c), j);
    offset += c;
  }
  return out;
}

SplitPair gen_split_pair(const NiwParams& niw, double alpha_dir, int n_max, const std::optional<NiwParams>& prior_for_h,
                         double alpha, Rng& rng) {
  if (n_max < 4) {
    throw Error(Errc::InvalidConfig, "n_max must be at least 4");
  }
  niw.validate();
  const Index d = niw.dim();
  constexpr int kMaxAttempts = 100;
  for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
    const Vector p = dirichlet(2, alpha_dir, rng);
    const auto n1 = std::max<Index>(1, static_cast<Index>(std::ceil(p(0) * n_max)));
    const auto n2 = std::max<Index>(1, static_cast<Index>(std::ceil(p(1) * n_max)));
    const GaussianParams g1 = sample_niw(niw, rng);
    const GaussianParams g2 = sample_niw(niw, rng);

    SplitPair pair;
    pair.attempts = attempt;
    pair.data.points.resize(n1 + n2, d);
    sample_points(g1, n1, rng, pair.data.points, 0);
    sample_points(g2, n2, rng, pair.data.points, n1);
    pair.data.labels.assign(static_cast<std::size_t>(n1), 0);
    pair.data.labels.insert(pair.data.labels.end(), static_cast<std::size_t>(n2), 1);

    const NiwParams prior = prior_for_h ? *prior_for_h : default_prior(pair.data.points);
    const SuffStats left = suffstats_from_points(pair.data.points.topRows(n1));
    const SuffStats right = suffstats_from_points(pair.data.points.bottomRows(n2));
    pair.log_h = split_log_hastings(left + right, left, right, alpha, prior);
    if (pair.log_h > 1.0) {
      return pair;
    }
  }
  throw Error(Errc::UnsplittablePrior, "no splittable pair in 100 attempts; the generation prior is too hard");
}

}  // namespace subsplit
