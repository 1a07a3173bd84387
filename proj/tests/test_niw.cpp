#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "subsplit/error.hpp"
#include "subsplit/niw.hpp"

using namespace subsplit;

namespace {

Matrix random_points(Index n, Index d, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Matrix m(n, d);
  for (Index i = 0; i < m.size(); ++i) {
    m.data()[i] = scale * standard_normal(rng);
  }
  return m;
}

NiwParams random_prior(Index d, Rng& rng) {
  NiwParams p;
  p.mu0 = Vector(d);
  for (Index i = 0; i < d; ++i) p.mu0(i) = standard_normal(rng);
  p.kappa = 0.1 + 3.0 * uniform01(rng);
  Matrix a(d, d);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = standard_normal(rng);
  p.psi = a * a.transpose() + Matrix::Identity(d, d) * 0.5;
  p.nu = static_cast<double>(d) - 1.0 + 0.5 + 5.0 * uniform01(rng);
  return p;
}

NiwParams unit_prior(Index d) {
  return NiwParams{Vector::Zero(d), 1.0, Matrix::Identity(d, d), static_cast<double>(d) + 2.0};
}

}  // namespace

TEST_CASE("suffstats: empty matrix gives zero stats") {
  const SuffStats s = suffstats_from_points(Matrix(0, 3));
  CHECK(s.m == 0);
  CHECK(s.sum_x.isZero());
  CHECK(s.sum_xxT.isZero());
  CHECK(s.dim() == 3);
}

TEST_CASE("suffstats: two-point arithmetic") {
  Matrix p(2, 2);
  p << 1, 2, 3, 4;
  const SuffStats s = suffstats_from_points(p);
  CHECK(s.m == 2);
  CHECK(s.sum_x(0) == 4.0);
  CHECK(s.sum_x(1) == 6.0);
  CHECK(s.sum_xxT(0, 0) == 10.0);
  CHECK(s.sum_xxT(0, 1) == 14.0);
  CHECK(s.sum_xxT(1, 0) == 14.0);
  CHECK(s.sum_xxT(1, 1) == 20.0);
}

TEST_CASE("suffstats: matches brute-force loops and is additive over bipartitions") {
  const Matrix pts = random_points(50, 3, 11);
  const SuffStats all = suffstats_from_points(pts);
  const auto ref = oracle::brute_stats(pts);
  CHECK(all.m == ref.m);
  CHECK((all.sum_x - ref.sum_x).norm() < 1e-12);
  CHECK((all.sum_xxT - ref.sum_xxT).norm() < 1e-11);

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Index> a, b;
    for (Index i = 0; i < pts.rows(); ++i) (uniform01(rng) < 0.5 ? a : b).push_back(i);
    const SuffStats sum = suffstats_from_points(pts(a, Eigen::all)) + suffstats_from_points(pts(b, Eigen::all));
    CHECK(sum.m == all.m);
    CHECK((sum.sum_x - all.sum_x).norm() <= 1e-9 * all.sum_x.norm());
    CHECK((sum.sum_xxT - all.sum_xxT).norm() <= 1e-9 * all.sum_xxT.norm());
    const SuffStats diff = all - suffstats_from_points(pts(a, Eigen::all));
    CHECK(diff.m == static_cast<Index>(b.size()));
  }
}

TEST_CASE("suffstats: order independent, bit-identical under row permutation") {
  Matrix pts = random_points(1000, 2, 3, 50.0);
  const SuffStats s1 = suffstats_from_points(pts);
  std::vector<Index> perm(static_cast<std::size_t>(pts.rows()));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), std::mt19937(1));
  const SuffStats s2 = suffstats_from_points(pts(perm, Eigen::all));
  CHECK(s1.sum_x == s2.sum_x);
  CHECK(s1.sum_xxT == s2.sum_xxT);
}

TEST_CASE("suffstats: non-finite input rejected") {
  Matrix p = Matrix::Zero(3, 2);
  p(1, 1) = std::nan("");
  CHECK_THROWS_AS(suffstats_from_points(p), Error);
  try {
    suffstats_from_points(p);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidData);
  }
}

TEST_CASE("niw_posterior: empty stats return the prior exactly") {
  Rng rng(1);
  const NiwParams prior = random_prior(3, rng);
  const NiwParams post = niw_posterior(prior, SuffStats(3));
  CHECK(post.mu0 == prior.mu0);
  CHECK(post.kappa == prior.kappa);
  CHECK(post.nu == prior.nu);
  CHECK(post.psi == prior.psi);
}

TEST_CASE("niw_posterior: one-dimensional hand evaluation") {
  const NiwParams prior{Vector::Zero(1), 1.0, Matrix::Ones(1, 1), 3.0};
  Matrix x(1, 1);
  x << 2.0;
  const NiwParams post = niw_posterior(prior, suffstats_from_points(x));
  CHECK(post.mu0(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(post.kappa == 2.0);
  CHECK(post.nu == 4.0);
  CHECK(post.psi(0, 0) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("niw_posterior: batch equals incremental") {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const Index d = 1 + t % 3;
    const NiwParams prior = random_prior(d, rng);
    const Matrix a = random_points(7 + t, d, 100 + t);
    const Matrix b = random_points(4 + t, d, 200 + t, 3.0);
    Matrix ab(a.rows() + b.rows(), d);
    ab << a, b;
    const NiwParams batch = niw_posterior(prior, suffstats_from_points(ab));
    const NiwParams inc = niw_posterior(niw_posterior(prior, suffstats_from_points(a)), suffstats_from_points(b));
    CHECK((batch.mu0 - inc.mu0).norm() < 1e-12);
    CHECK(batch.kappa == doctest::Approx(inc.kappa));
    CHECK(batch.nu == doctest::Approx(inc.nu));
    CHECK((batch.psi - inc.psi).norm() < 1e-10 * batch.psi.norm());
    CHECK(batch.psi.isApprox(batch.psi.transpose(), 0.0));
    CHECK(batch.psi.llt().info() == Eigen::Success);
  }
}

TEST_CASE("log_multivariate_gamma: reference values") {
  CHECK(log_multivariate_gamma(1, 1.0) == doctest::Approx(0.0));
  CHECK(log_multivariate_gamma(1, 11.0) == doctest::Approx(15.1044125730755).epsilon(1e-12));
  CHECK(log_multivariate_gamma(2, 2.32) == doctest::Approx(0.673425977668427).epsilon(1e-12));
}

TEST_CASE("log_marginal_likelihood: empty stats give zero") {
  CHECK(log_marginal_likelihood(unit_prior(2), SuffStats(2)) == 0.0);
}

TEST_CASE("log_marginal_likelihood: agrees with one-dimensional quadrature") {
  Rng rng(9);
  for (int t = 0; t < 10; ++t) {
    const double mu0 = standard_normal(rng);
    const double kappa = 0.05 + 2.0 * uniform01(rng);
    const double psi = 0.2 + 3.0 * uniform01(rng);
    const double nu = 0.5 + 6.0 * uniform01(rng);
    std::vector<double> xs(static_cast<std::size_t>(1 + t * 3));
    Matrix pts(static_cast<Index>(xs.size()), 1);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      xs[i] = 1.5 * standard_normal(rng) + 0.5;
      pts(static_cast<Index>(i), 0) = xs[i];
    }
    const NiwParams prior{Vector::Constant(1, mu0), kappa, Matrix::Constant(1, 1, psi), nu};
    const double lib = log_marginal_likelihood(prior, suffstats_from_points(pts));
    const double ref = oracle::logml_1d_quadrature(mu0, kappa, psi, nu, xs);
    CHECK(lib == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("log_marginal_likelihood: chain rule over random splits") {
  Rng rng(13);
  for (int t = 0; t < 30; ++t) {
    const Index d = 1 + t % 3;
    const NiwParams prior = random_prior(d, rng);
    const Matrix a = random_points(3 + t, d, 300 + t);
    const Matrix b = random_points(2 + t % 5, d, 400 + t, 2.0);
    const SuffStats sa = suffstats_from_points(a);
    const SuffStats sb = suffstats_from_points(b);
    const double joint = log_marginal_likelihood(prior, sa + sb);
    const double chained = log_marginal_likelihood(prior, sa) + log_marginal_likelihood(niw_posterior(prior, sa), sb);
    CHECK(std::abs(joint - chained) < 1e-8);
  }
}

TEST_CASE("log_marginal_likelihood: bit-identical under point permutation") {
  const Matrix pts = random_points(200, 3, 21);
  std::vector<Index> perm(200);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::reverse(perm.begin(), perm.end());
  const NiwParams prior = unit_prior(3);
  CHECK(log_marginal_likelihood(prior, suffstats_from_points(pts)) ==
        log_marginal_likelihood(prior, suffstats_from_points(pts(perm, Eigen::all))));
}

TEST_CASE("log_marginal_likelihood: published two-dimensional reference values") {
  // Values from an independent NIW marginal-likelihood implementation.
  Matrix one(1, 2);
  one << 3.57839693972576, 0.725404224946106;
  Matrix four(4, 2);
  four << 3.57839693972576, 0.725404224946106, 2.76943702988488, -0.0630548731896562, -1.34988694015652,
      0.714742903826096, 3.03492346633185, -0.204966058299775;
  const NiwParams generic{Vector::Zero(2), 1.0, Matrix::Identity(2, 2), 2.0};
  CHECK(log_marginal_likelihood(generic, suffstats_from_points(one)) ==
        doctest::Approx(-5.5861321608291).epsilon(1e-11));
  CHECK(log_marginal_likelihood(generic, suffstats_from_points(four)) ==
        doctest::Approx(-16.3923777220275).epsilon(1e-11));

  Matrix psi(2, 2);
  psi << 0.226836817541677, -0.0200753958619398, -0.0200753958619398, 0.217753683861863;
  Vector mu0(2);
  mu0 << -0.124144348216312, 1.48969760778546;
  const NiwParams rnd{mu0, 2.03620546457332, psi, 2.273220391735};
  CHECK(log_marginal_likelihood(rnd, suffstats_from_points(one)) ==
        doctest::Approx(-6.60964751885643).epsilon(1e-11));
  CHECK(log_marginal_likelihood(rnd, suffstats_from_points(four)) ==
        doctest::Approx(-19.5739755706395).epsilon(1e-11));
}

TEST_CASE("sample_niw: concentrated prior") {
  const NiwParams p{Vector::Zero(1), 1e9, Matrix::Ones(1, 1), 1e9};
  Rng rng(4);
  const GaussianParams g = sample_niw(p, rng);
  CHECK(std::abs(g.mu(0)) < 1e-3);
  CHECK(g.sigma(0, 0) == doctest::Approx(1e-9).epsilon(1e-3));
}

TEST_CASE("sample_niw: Monte-Carlo mean of Sigma") {
  Matrix psi(2, 2);
  psi << 2.0, 0.5, 0.5, 1.0;
  const NiwParams p{Vector::Zero(2), 1.0, psi, 7.0};
  Rng rng(8);
  Matrix acc = Matrix::Zero(2, 2);
  Vector mu_acc = Vector::Zero(2);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const GaussianParams g = sample_niw(p, rng);
    acc += g.sigma;
    mu_acc += g.mu;
  }
  acc /= draws;
  const Matrix expected = psi / (7.0 - 2.0 - 1.0);
  for (Index i = 0; i < 4; ++i) {
    CHECK(std::abs(acc.data()[i] - expected.data()[i]) < 0.05 * std::abs(expected.data()[i]));
  }
  CHECK((mu_acc / draws).norm() < 0.02);
}

TEST_CASE("sample_niw: deterministic given rng state; rejects nu <= D - 1") {
  Rng r1(77);
  Rng r2(77);
  const NiwParams p = unit_prior(3);
  const GaussianParams a = sample_niw(p, r1);
  const GaussianParams b = sample_niw(p, r2);
  CHECK(a.mu == b.mu);
  CHECK(a.sigma == b.sigma);

  NiwParams bad = unit_prior(3);
  bad.nu = 2.0;
  Rng r3(1);
  try {
    sample_niw(bad, r3);
    FAIL("expected InvalidParams");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidParams);
  }
}

TEST_CASE("log_gaussian_pdf: closed forms and dense-inverse oracle") {
  const GaussianParams std2{Vector::Zero(2), Matrix::Identity(2, 2)};
  CHECK(log_gaussian_pdf(Vector::Zero(2), std2) == doctest::Approx(-std::log(2.0 * M_PI)).epsilon(1e-15));
  Vector x(2);
  x << 1.0, 0.0;
  CHECK(log_gaussian_pdf(x, std2) == doctest::Approx(-std::log(2.0 * M_PI) - 0.5).epsilon(1e-15));

  Rng rng(10);
  for (int t = 0; t < 20; ++t) {
    Matrix a(3, 3);
    for (Index i = 0; i < 9; ++i) a.data()[i] = standard_normal(rng);
    const GaussianParams g{Vector::Random(3), a * a.transpose() + 0.3 * Matrix::Identity(3, 3)};
    const Vector y = Vector::Random(3) * 3.0;
    const double ref = oracle::gaussian_logpdf_dense(y, g.mu, g.sigma);
    CHECK(log_gaussian_pdf(y, g) == doctest::Approx(ref).epsilon(1e-10));
    const GaussianDensity dens(g);
    CHECK(dens.log_pdf(y) == doctest::Approx(ref).epsilon(1e-10));
    Matrix rows(2, 3);
    rows.row(0) = y.transpose();
    rows.row(1) = g.mu.transpose();
    Vector out(2);
    dens.log_pdf_rows(rows, out);
    CHECK(out(0) == doctest::Approx(ref).epsilon(1e-10));
    CHECK(out(1) == doctest::Approx(oracle::gaussian_logpdf_dense(g.mu, g.mu, g.sigma)).epsilon(1e-10));
  }
}

TEST_CASE("log_gaussian_pdf: non-PD covariance is a numerical failure") {
  Matrix s(2, 2);
  s << 1.0, 2.0, 2.0, 1.0;
  const GaussianParams g{Vector::Zero(2), s};
  try {
    log_gaussian_pdf(Vector::Zero(2), g);
    FAIL("expected NumericalFailure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NumericalFailure);
  }
}

TEST_CASE("NiwParams::validate rejects malformed priors") {
  NiwParams p = unit_prior(2);
  CHECK_NOTHROW(p.validate());
  p.kappa = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = unit_prior(2);
  p.psi = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(p.validate(), Error);
  p = unit_prior(2);
  p.psi(0, 0) = -1.0;
  CHECK_THROWS_AS(p.validate(), Error);
}
