#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "subsplit/rng.hpp"

namespace subsplit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Normal-Inverse-Wishart hyperparameters (mu0, kappa, psi, nu).
// Sigma ~ IW(psi, nu), mu | Sigma ~ N(mu0, Sigma / kappa).
struct NiwParams {
  Vector mu0;
  double kappa = 1.0;
  Matrix psi;
  double nu = 0.0;

  Index dim() const { return mu0.size(); }

  // Throws Errc::InvalidParams when an invariant does not hold.
  void validate() const;
};

// Count, sum and sum of outer products of a point set.
struct SuffStats {
  Index m = 0;
  Vector sum_x;
  Matrix sum_xxT;

  SuffStats() = default;
  explicit SuffStats(Index dim) : sum_x(Vector::Zero(dim)), sum_xxT(Matrix::Zero(dim, dim)) {}

  Index dim() const { return sum_x.size(); }

  void add_point(const Eigen::Ref<const Vector>& x) {
    ++m;
    sum_x += x;
    sum_xxT.selfadjointView<Eigen::Lower>().rankUpdate(x);
    // rankUpdate only fills the lower triangle; the upper half is mirrored in
    // finalize() so per-point cost stays at D(D+1)/2.
  }

  // Mirrors the lower triangle; call after a run of add_point().
  void finalize() { sum_xxT.triangularView<Eigen::StrictlyUpper>() = sum_xxT.transpose(); }

  Vector mean() const { return sum_x / static_cast<double>(m); }

  // Centered scatter matrix sum_xxT - m * xbar xbar^T, symmetrized.
  Matrix scatter() const;

  SuffStats& operator+=(const SuffStats& other);
  SuffStats& operator-=(const SuffStats& other);
  friend SuffStats operator+(SuffStats a, const SuffStats& b) { return a += b; }
  friend SuffStats operator-(SuffStats a, const SuffStats& b) { return a -= b; }
};

struct GaussianParams {
  Vector mu;
  Matrix sigma;

  Index dim() const { return mu.size(); }
};

// Sufficient statistics of the rows of `points` (N x D). The rows are
// accumulated in lexicographic order so the result does not depend on the
// order in which the points are listed.
SuffStats suffstats_from_points(const Eigen::Ref<const Matrix>& points);

NiwParams niw_posterior(const NiwParams& prior, const SuffStats& stats);

// log Gamma_D(a), the multivariate log-Gamma function.
double log_multivariate_gamma(Index dim, double a);

// Log marginal likelihood of the points summarized by `stats` with the
// Gaussian parameters integrated out under `prior`.
double log_marginal_likelihood(const NiwParams& prior, const SuffStats& stats);

GaussianParams sample_niw(const NiwParams& params, Rng& rng);

double log_gaussian_pdf(const Eigen::Ref<const Vector>& x, const GaussianParams& params);

// A Gaussian with its Cholesky factor cached, for evaluating many points.
class GaussianDensity {
 public:
  GaussianDensity() = default;
  explicit GaussianDensity(const GaussianParams& params);

  double log_pdf(const Eigen::Ref<const Vector>& x) const;

  // Log density of every row of `points`, written into `out`.
  void log_pdf_rows(const Eigen::Ref<const Matrix>& points, Eigen::Ref<Vector> out) const;

  Index dim() const { return mu_.size(); }

 private:
  Vector mu_;
  Matrix chol_;  // lower factor of sigma
  double log_norm_ = 0.0;
};

// log |A| for symmetric positive-definite A, with one jittered retry.
// Throws Errc::NumericalFailure when both factorizations fail.
double log_det_spd(const Matrix& a);

}  // namespace subsplit
