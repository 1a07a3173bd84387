#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "subsplit/niw.hpp"
#include "subsplit/set_transformer.hpp"

namespace subsplit {

// One bit per point of a cluster: 0 -> left subcluster, 1 -> right.
using SubAssignment = std::vector<std::uint8_t>;

struct KMeansOptions {
  int max_iters = 100;
  double rel_tol = 1e-6;
};

// i.i.d. fair-coin bits. Either side may come out empty.
SubAssignment init_random(Index n_points, Rng& rng);

// Lloyd's algorithm with K = 2 and k-means++ seeding. Points are visited in
// lexicographic order internally, so permuting the rows permutes the output
// and scaling the data leaves it unchanged for the same rng state.
// Throws Errc::DegenerateCluster when fewer than two distinct points exist.
SubAssignment init_kmeans2(const Eigen::Ref<const Matrix>& points, Rng& rng, const KMeansOptions& opts = {});

// Per-dimension standardized input through the Set Transformer, thresholded
// at probability 0.5. If one side comes out empty, the point whose logit is
// most extreme toward the other side is moved over.
SubAssignment init_splitnet(const Eigen::Ref<const Matrix>& points, const st::StWeights& weights);

// SplitNet logits after input standardization; exposed for diagnostics.
st::VectorF splitnet_logits(const Eigen::Ref<const Matrix>& points, const st::StWeights& weights);

struct RandomInit {};
struct KMeans2Init {
  KMeansOptions options;
};
struct SplitNetInit {
  std::shared_ptr<const st::StWeights> weights;
};

// Strategy used whenever a cluster's subclusters need fresh labels.
class SplitInitializer {
 public:
  using Variant = std::variant<RandomInit, KMeans2Init, SplitNetInit>;

  SplitInitializer() = default;
  SplitInitializer(Variant v) : variant_(std::move(v)) {}  // NOLINT(google-explicit-constructor)

  static SplitInitializer random() { return {RandomInit{}}; }
  static SplitInitializer kmeans(KMeansOptions opts = {}) { return {KMeans2Init{opts}}; }
  static SplitInitializer splitnet(std::shared_ptr<const st::StWeights> weights);

  // Validates the strategy against the data dimension.
  void check_dim(Index dim) const;

  // Subcluster bits for the given cluster points. KMeans2 falls back to
  // init_random for degenerate clusters; every strategy falls back to
  // init_random for single-point clusters.
  SubAssignment assign(const Eigen::Ref<const Matrix>& points, Rng& rng) const;

  std::string name() const;
  const Variant& variant() const { return variant_; }

 private:
  Variant variant_{RandomInit{}};
};

// Parses "random", "kmeans" or "splitnet"; the SplitNet variant needs weights.
SplitInitializer make_initializer(const std::string& name, std::shared_ptr<const st::StWeights> weights = nullptr);

}  // namespace subsplit
