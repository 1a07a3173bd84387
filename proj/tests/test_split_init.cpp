#include <doctest.h>

#include <algorithm>
#include <memory>
#include <numeric>
#include <random>

#include "subsplit/error.hpp"
#include "subsplit/metrics.hpp"
#include "subsplit/split_init.hpp"

using namespace subsplit;

namespace {

Matrix two_blobs(Index n, double sep, Rng& rng) {
  Matrix m(2 * n, 2);
  for (Index i = 0; i < 2 * n; ++i) {
    m(i, 0) = (i < n ? -sep : sep) + standard_normal(rng);
    m(i, 1) = standard_normal(rng);
  }
  return m;
}

std::vector<std::uint8_t> truth(Index n) {
  std::vector<std::uint8_t> t(static_cast<std::size_t>(2 * n), 0);
  std::fill(t.begin() + n, t.end(), 1);
  return t;
}

std::vector<Index> shuffled(Index n, unsigned seed) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  std::shuffle(p.begin(), p.end(), std::mt19937(seed));
  return p;
}

std::shared_ptr<const st::StWeights> small_net(std::uint64_t seed) {
  st::StMeta meta;
  meta.hidden_dim = 16;
  meta.heads = 2;
  meta.inducing = 4;
  return std::make_shared<const st::StWeights>(st::StWeights::random(meta, seed));
}

}  // namespace

TEST_CASE("init_random: single bit, fair coin, deterministic") {
  Rng rng(1);
  CHECK(init_random(1, rng).size() == 1);
  Rng r1(7);
  const SubAssignment a = init_random(10000, r1);
  const double frac = std::accumulate(a.begin(), a.end(), 0.0) / 10000.0;
  CHECK(frac >= 0.48);
  CHECK(frac <= 0.52);
  Rng r2(7);
  CHECK(init_random(10000, r2) == a);
}

TEST_CASE("init_kmeans2: separated blobs are split exactly") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const Matrix pts = two_blobs(100, 10.0, rng);
    const SubAssignment s = init_kmeans2(pts, rng);
    CHECK(best_swap_accuracy(truth(100), s) == 1.0);
  }
}

TEST_CASE("init_kmeans2: two distinct points go to different sides") {
  Matrix p(2, 3);
  p << 0, 0, 0, 1, 2, 3;
  Rng rng(2);
  const SubAssignment s = init_kmeans2(p, rng);
  CHECK(s[0] != s[1]);
}

TEST_CASE("init_kmeans2: scale and permutation equivariant") {
  Rng gen(3);
  const Matrix pts = two_blobs(60, 1.0, gen);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng r1(seed), r2(seed), r3(seed);
    const SubAssignment base = init_kmeans2(pts, r1);
    CHECK(init_kmeans2(pts * 37.5, r2) == base);
    const auto perm = shuffled(pts.rows(), static_cast<unsigned>(seed));
    const SubAssignment permuted = init_kmeans2(pts(perm, Eigen::all), r3);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      CHECK(permuted[i] == base[static_cast<std::size_t>(perm[i])]);
    }
    CHECK(std::count(base.begin(), base.end(), 1) > 0);
    CHECK(std::count(base.begin(), base.end(), 0) > 0);
  }
}

TEST_CASE("init_kmeans2: degenerate clusters") {
  Rng rng(4);
  try {
    init_kmeans2(Matrix::Ones(5, 2), rng);
    FAIL("expected DegenerateCluster");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateCluster);
  }
  CHECK_THROWS_AS(init_kmeans2(Matrix::Ones(1, 2), rng), Error);
  // the strategy wrapper falls back to random bits instead
  const SubAssignment s = SplitInitializer::kmeans().assign(Matrix::Ones(5, 2), rng);
  CHECK(s.size() == 5);
}

TEST_CASE("init_splitnet: permutation equivariant, deterministic, both sides nonempty") {
  const auto net = small_net(11);
  Rng gen(5);
  const Matrix pts = two_blobs(40, 3.0, gen);
  const SubAssignment base = init_splitnet(pts, *net);
  CHECK(init_splitnet(pts, *net) == base);
  CHECK(std::count(base.begin(), base.end(), 1) > 0);
  CHECK(std::count(base.begin(), base.end(), 0) > 0);
  const auto perm = shuffled(pts.rows(), 9);
  const SubAssignment permuted = init_splitnet(pts(perm, Eigen::all), *net);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    CHECK(permuted[i] == base[static_cast<std::size_t>(perm[i])]);
  }
}

TEST_CASE("init_splitnet: constant column and constant input stay finite") {
  const auto net = small_net(12);
  Rng gen(6);
  Matrix pts = two_blobs(10, 3.0, gen);
  pts.col(1).setConstant(4.0);
  const st::VectorF logits = splitnet_logits(pts, *net);
  CHECK(logits.allFinite());
  const SubAssignment s = init_splitnet(Matrix::Constant(6, 2, 1.0), *net);
  CHECK(s.size() == 6);
  CHECK(std::count(s.begin(), s.end(), 1) >= 1);
  CHECK(std::count(s.begin(), s.end(), 0) >= 1);
}

TEST_CASE("init_splitnet: dimension mismatch") {
  const auto net = small_net(13);
  try {
    init_splitnet(Matrix::Random(5, 3), *net);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DimensionMismatch);
  }
  CHECK_THROWS_AS(SplitInitializer::splitnet(net).check_dim(3), Error);
  CHECK_NOTHROW(SplitInitializer::splitnet(net).check_dim(2));
}

TEST_CASE("make_initializer: names") {
  CHECK(make_initializer("random").name() == "random");
  CHECK(make_initializer("kmeans").name() == "kmeans");
  CHECK(make_initializer("splitnet", small_net(1)).name() == "splitnet");
  CHECK_THROWS_AS(make_initializer("splitnet"), Error);
  CHECK_THROWS_AS(make_initializer("kmedoids"), Error);
}

TEST_CASE("SplitInitializer::assign: lengths and single-point clusters") {
  Rng rng(8);
  const auto net = small_net(2);
  for (const SplitInitializer& s : {SplitInitializer::random(), SplitInitializer::kmeans(), SplitInitializer::splitnet(net)}) {
    CHECK(s.assign(Matrix::Random(1, 2), rng).size() == 1);
    CHECK(s.assign(Matrix::Random(17, 2), rng).size() == 17);
  }
}
