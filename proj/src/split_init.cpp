#include "subsplit/split_init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "subsplit/error.hpp"

namespace subsplit {

namespace {

std::vector<Index> lexicographic_order(const Eigen::Ref<const Matrix>& points) {
  std::vector<Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  const Index d = points.cols();
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index j = 0; j < d; ++j) {
      if (points(a, j) != points(b, j)) {
        return points(a, j) < points(b, j);
      }
    }
    return false;
  });
  return order;
}

}  // namespace

SubAssignment init_random(Index n_points, Rng& rng) {
  SubAssignment bits(static_cast<std::size_t>(n_points));
  for (auto& b : bits) {
    b = static_cast<std::uint8_t>(rng() >> 63);
  }
  return bits;
}

SubAssignment init_kmeans2(const Eigen::Ref<const Matrix>& points, Rng& rng, const KMeansOptions& opts) {
  const Index n = points.rows();
  const Index d = points.cols();
  if (n < 2) {
    throw Error(Errc::DegenerateCluster, "2-means needs at least two points");
  }
  const std::vector<Index> order = lexicographic_order(points);
  Matrix sorted(n, d);
  for (Index i = 0; i < n; ++i) {
    sorted.row(i) = points.row(order[static_cast<std::size_t>(i)]);
  }
  if ((sorted.rowwise() - sorted.row(0)).cwiseAbs().maxCoeff() == 0.0) {
    throw Error(Errc::DegenerateCluster, "all points are identical");
  }

  // k-means++ seeding
  Matrix centers(2, d);
  const auto first = std::min<Index>(static_cast<Index>(uniform01(rng) * static_cast<double>(n)), n - 1);
  centers.row(0) = sorted.row(first);
  const Vector dist2 = (sorted.rowwise() - centers.row(0)).rowwise().squaredNorm();
  const double target = uniform01(rng) * dist2.sum();
  Index second = n - 1;
  double cumulative = 0.0;
  for (Index i = 0; i < n; ++i) {
    cumulative += dist2(i);
    if (dist2(i) > 0.0 && cumulative > target) {
      second = i;
      break;
    }
  }
  centers.row(1) = sorted.row(second);

  std::vector<std::uint8_t> assign(static_cast<std::size_t>(n), 0);
  double prev_inertia = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    double inertia = 0.0;
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      const double d0 = (sorted.row(i) - centers.row(0)).squaredNorm();
      const double d1 = (sorted.row(i) - centers.row(1)).squaredNorm();
      const std::uint8_t a = d1 < d0 ? 1 : 0;
      inertia += a ? d1 : d0;
      changed |= assign[static_cast<std::size_t>(i)] != a;
      assign[static_cast<std::size_t>(i)] = a;
    }
    Matrix sums = Matrix::Zero(2, d);
    std::array<Index, 2> counts{0, 0};
    for (Index i = 0; i < n; ++i) {
      const auto a = assign[static_cast<std::size_t>(i)];
      sums.row(a) += sorted.row(i);
      ++counts[a];
    }
    for (int c = 0; c < 2; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
      }
    }
    if ((iter > 0 && !changed) || prev_inertia - inertia <= opts.rel_tol * inertia) {
      break;
    }
    prev_inertia = inertia;
  }

  SubAssignment bits(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    bits[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = assign[static_cast<std::size_t>(i)];
  }
  return bits;
}

st::VectorF splitnet_logits(const Eigen::Ref<const Matrix>& points, const st::StWeights& weights) {
  if (points.cols() != static_cast<Index>(weights.meta().input_dim)) {
    throw Error(Errc::DimensionMismatch, "cluster dimension " + std::to_string(points.cols()) +
                                             " does not match SplitNet input dimension " +
                                             std::to_string(weights.meta().input_dim));
  }
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const Matrix centered = points.rowwise() - mean;
  // population standard deviation, floored
  const Eigen::RowVectorXd std_dev =
      (centered.colwise().squaredNorm() / static_cast<double>(points.rows())).cwiseSqrt().cwiseMax(1e-8);
  const Matrix normalized = centered.array().rowwise() / std_dev.array();
  const st::MatrixF x = normalized.cast<float>();
  return st::set_transformer_forward(x, weights);
}

SubAssignment init_splitnet(const Eigen::Ref<const Matrix>& points, const st::StWeights& weights) {
  const st::VectorF logits = splitnet_logits(points, weights);
  const Index n = logits.size();
  SubAssignment bits(static_cast<std::size_t>(n));
  Index ones = 0;
  for (Index i = 0; i < n; ++i) {
    bits[static_cast<std::size_t>(i)] = logits(i) >= 0.0f ? 1 : 0;
    ones += bits[static_cast<std::size_t>(i)];
  }
  if (n >= 2 && ones == n) {
    Index idx = 0;
    logits.minCoeff(&idx);
    bits[static_cast<std::size_t>(idx)] = 0;
  } else if (n >= 2 && ones == 0) {
    Index idx = 0;
    logits.maxCoeff(&idx);
    bits[static_cast<std::size_t>(idx)] = 1;
  }
  return bits;
}

SplitInitializer SplitInitializer::splitnet(std::shared_ptr<const st::StWeights> weights) {
  if (!weights) {
    throw Error(Errc::InvalidConfig, "SplitNet initializer requires weights");
  }
  return {SplitNetInit{std::move(weights)}};
}

void SplitInitializer::check_dim(Index dim) const {
  if (const auto* net = std::get_if<SplitNetInit>(&variant_)) {
    if (static_cast<Index>(net->weights->meta().input_dim) != dim) {
      throw Error(Errc::DimensionMismatch, "SplitNet was trained for D=" +
                                               std::to_string(net->weights->meta().input_dim) + ", data has D=" +
                                               std::to_string(dim));
    }
  }
}

SubAssignment SplitInitializer::assign(const Eigen::Ref<const Matrix>& points, Rng& rng) const {
  if (points.rows() < 2) {
    return init_random(points.rows(), rng);
  }
  return std::visit(
      [&](const auto& strategy) -> SubAssignment {
        using T = std::decay_t<decltype(strategy)>;
        if constexpr (std::is_same_v<T, RandomInit>) {
          return init_random(points.rows(), rng);
        } else if constexpr (std::is_same_v<T, KMeans2Init>) {
          try {
            return init_kmeans2(points, rng, strategy.options);
          } catch (const Error& e) {
            if (e.code() != Errc::DegenerateCluster) {
              throw;
            }
            return init_random(points.rows(), rng);
          }
        } else {
          return init_splitnet(points, *strategy.weights);
        }
      },
      variant_);
}

std::string SplitInitializer::name() const {
  switch (variant_.index()) {
    case 0: return "random";
    case 1: return "kmeans";
    default: return "splitnet";
  }
}

SplitInitializer make_initializer(const std::string& name, std::shared_ptr<const st::StWeights> weights) {
  if (name == "random") {
    return SplitInitializer::random();
  }
  if (name == "kmeans") {
    return SplitInitializer::kmeans();
  }
  if (name == "splitnet") {
    return SplitInitializer::splitnet(std::move(weights));
  }
  throw Error(Errc::InvalidConfig, "unknown split initializer '" + name + "'");
}

}  // namespace subsplit
