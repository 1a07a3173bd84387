#include "subsplit/niw.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "subsplit/error.hpp"

namespace subsplit {

namespace {

constexpr double kLogPi = 1.1447298858494002;  // log(pi)
constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

bool symmetric(const Matrix& a, double rel_tol) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

// Cholesky with the jitter retry: add 1e-10 * trace / D to the diagonal once.
Eigen::LLT<Matrix> robust_llt(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) {
    return llt;
  }
  const double jitter = 1e-10 * std::abs(a.trace()) / static_cast<double>(a.rows());
  Matrix jittered = a;
  jittered.diagonal().array() += jitter;
  llt.compute(jittered);
  if (llt.info() != Eigen::Success) {
    throw Error(Errc::NumericalFailure, "matrix is not positive definite");
  }
  return llt;
}

double log_det_from_llt(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

void NiwParams::validate() const {
  const Index d = dim();
  if (d < 1) {
    throw Error(Errc::InvalidParams, "NIW dimension must be at least 1");
  }
  if (psi.rows() != d || psi.cols() != d) {
    throw Error(Errc::InvalidParams, "psi must be D x D");
  }
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw Error(Errc::InvalidParams, "kappa must be positive");
  }
  if (!(nu > static_cast<double>(d) - 1.0) || !std::isfinite(nu)) {
    throw Error(Errc::InvalidParams, "nu must exceed D - 1");
  }
  if (!mu0.allFinite() || !psi.allFinite()) {
    throw Error(Errc::InvalidParams, "non-finite NIW hyperparameters");
  }
  if (!symmetric(psi, 1e-10)) {
    throw Error(Errc::InvalidParams, "psi is not symmetric");
  }
  if (Eigen::LLT<Matrix>(psi).info() != Eigen::Success) {
    throw Error(Errc::InvalidParams, "psi is not positive definite");
  }
}

Matrix SuffStats::scatter() const {
  if (m == 0) {
    return Matrix::Zero(dim(), dim());
  }
  const Vector xbar = mean();
  Matrix s = sum_xxT - static_cast<double>(m) * xbar * xbar.transpose();
  return 0.5 * (s + s.transpose());
}

SuffStats& SuffStats::operator+=(const SuffStats& other) {
  m += other.m;
  sum_x += other.sum_x;
  sum_xxT += other.sum_xxT;
  return *this;
}

SuffStats& SuffStats::operator-=(const SuffStats& other) {
  m -= other.m;
  sum_x -= other.sum_x;
  sum_xxT -= other.sum_xxT;
  if (m == 0) {
    sum_x.setZero();
    sum_xxT.setZero();
  }
  return *this;
}

SuffStats suffstats_from_points(const Eigen::Ref<const Matrix>& points) {
  if (!points.allFinite()) {
    throw Error(Errc::InvalidData, "non-finite point coordinates");
  }
  const Index n = points.rows();
  const Index d = points.cols();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index j = 0; j < d; ++j) {
      if (points(a, j) != points(b, j)) {
        return points(a, j) < points(b, j);
      }
    }
    return false;
  });
  SuffStats stats(d);
  Vector row(d);
  for (Index i : order) {
    row = points.row(i).transpose();
    stats.add_point(row);
  }
  stats.finalize();
  return stats;
}

NiwParams niw_posterior(const NiwParams& prior, const SuffStats& stats) {
  if (stats.m == 0) {
    return prior;
  }
  const double m = static_cast<double>(stats.m);
  const Vector xbar = stats.mean();
  const Vector diff = xbar - prior.mu0;

  NiwParams post;
  post.kappa = prior.kappa + m;
  post.nu = prior.nu + m;
  post.mu0 = (prior.kappa * prior.mu0 + m * xbar) / post.kappa;
  post.psi = prior.psi + stats.scatter() + (prior.kappa * m / post.kappa) * diff * diff.transpose();
  post.psi = 0.5 * (post.psi + post.psi.transpose());
  return post;
}

double log_multivariate_gamma(Index dim, double a) {
  const double d = static_cast<double>(dim);
  double out = d * (d - 1.0) / 4.0 * kLogPi;
  for (Index j = 1; j <= dim; ++j) {
    out += std::lgamma(a + (1.0 - static_cast<double>(j)) / 2.0);
  }
  return out;
}

double log_det_spd(const Matrix& a) { return log_det_from_llt(robust_llt(a)); }

double log_marginal_likelihood(const NiwParams& prior, const SuffStats& stats) {
  if (stats.m == 0) {
    return 0.0;
  }
  const NiwParams post = niw_posterior(prior, stats);
  const Index dim = prior.dim();
  const double d = static_cast<double>(dim);
  const double m = static_cast<double>(stats.m);
  return -0.5 * m * d * kLogPi                                                  //
         + log_multivariate_gamma(dim, 0.5 * post.nu) - log_multivariate_gamma(dim, 0.5 * prior.nu)  //
         + 0.5 * prior.nu * log_det_spd(prior.psi) - 0.5 * post.nu * log_det_spd(post.psi)       //
         + 0.5 * d * (std::log(prior.kappa) - std::log(post.kappa));
}

GaussianParams sample_niw(const NiwParams& params, Rng& rng) {
  const Index d = params.dim();
  if (!(params.nu > static_cast<double>(d) - 1.0)) {
    throw Error(Errc::InvalidParams, "nu must exceed D - 1");
  }
  // Bartlett: W = (L A)(L A)^T ~ Wishart(psi^-1, nu) with L = chol(psi^-1),
  // A lower triangular, A_ii = sqrt(chi2(nu - i)), A_ij ~ N(0, 1).
  const Eigen::LLT<Matrix> psi_llt = robust_llt(params.psi);
  const Matrix psi_inv = psi_llt.solve(Matrix::Identity(d, d));
  const Eigen::LLT<Matrix> inv_llt = robust_llt(0.5 * (psi_inv + psi_inv.transpose()));

  Matrix a = Matrix::Zero(d, d);
  for (Index i = 0; i < d; ++i) {
    const double dof = params.nu - static_cast<double>(i);
    a(i, i) = std::sqrt(2.0 * gamma_variate(0.5 * dof, rng));
    for (Index j = 0; j < i; ++j) {
      a(i, j) = standard_normal(rng);
    }
  }
  const Matrix la = inv_llt.matrixL() * a;  // lower triangular
  // Sigma = W^-1 = (L A)^-T (L A)^-1
  const Matrix la_inv = la.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));
  Matrix sigma = la_inv.transpose() * la_inv;
  sigma = 0.5 * (sigma + sigma.transpose());

  const Eigen::LLT<Matrix> sigma_llt = robust_llt(sigma);
  Vector z(d);
  for (Index i = 0; i < d; ++i) {
    z(i) = standard_normal(rng);
  }
  GaussianParams out;
  out.mu = params.mu0 + (sigma_llt.matrixL() * z) / std::sqrt(params.kappa);
  out.sigma = std::move(sigma);
  return out;
}

GaussianDensity::GaussianDensity(const GaussianParams& params) : mu_(params.mu) {
  const Eigen::LLT<Matrix> llt = robust_llt(params.sigma);
  chol_ = llt.matrixL();
  log_norm_ = -0.5 * static_cast<double>(mu_.size()) * kLog2Pi - 0.5 * log_det_from_llt(llt);
}

double GaussianDensity::log_pdf(const Eigen::Ref<const Vector>& x) const {
  const Vector y = chol_.triangularView<Eigen::Lower>().solve(x - mu_);
  return log_norm_ - 0.5 * y.squaredNorm();
}

void GaussianDensity::log_pdf_rows(const Eigen::Ref<const Matrix>& points, Eigen::Ref<Vector> out) const {
  Matrix centered = (points.rowwise() - mu_.transpose()).transpose();
  chol_.triangularView<Eigen::Lower>().solveInPlace(centered);
  out = (log_norm_ - 0.5 * centered.colwise().squaredNorm().array()).transpose();
}

double log_gaussian_pdf(const Eigen::Ref<const Vector>& x, const GaussianParams& params) {
  if (x.size() != params.dim()) {
    throw Error(Errc::DimensionMismatch, "point and Gaussian dimensions differ");
  }
  return GaussianDensity(params).log_pdf(x);
}

}  // namespace subsplit
