#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace subsplit::st {

// Row-major single-precision matrices; one row per set element.
using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VectorF = Eigen::VectorXf;

struct StMeta {
  std::uint32_t input_dim = 2;    // D
  std::uint32_t hidden_dim = 64;  // d_h
  std::uint32_t heads = 4;        // h
  std::uint32_t inducing = 32;    // m_ind
  std::uint32_t isab_layers = 2;  // L
  std::uint32_t seeds = 2;        // M

  friend bool operator==(const StMeta&, const StMeta&) = default;
};

// A rank-1 or rank-2 float tensor. Vectors are stored as 1 x n.
struct Tensor {
  std::vector<std::uint32_t> dims;
  MatrixF value;
};

// Weights of one multihead attention block: projections with biases,
// the inner rFF (applied to the attention output) and the outer rFF.
struct MabWeights {
  MatrixF wq, wk, wv, wo;  // d_h x d_h, applied as X * W
  VectorF bq, bk, bv, bo;
  MatrixF ff_in_w, ff_out_w;
  VectorF ff_in_b, ff_out_b;
};

struct IsabWeights {
  MatrixF inducing;  // m_ind x d_h
  MabWeights inner;  // MAB(I, X)
  MabWeights outer;  // MAB(X, H)
};

// A trained SplitNet. Built from the named tensor map by from_tensors(),
// which checks every shape against the meta block.
class StWeights {
 public:
  static StWeights from_tensors(const StMeta& meta, std::map<std::string, Tensor> tensors);

  // Deterministic Gaussian-initialized weights, scaled by `scale`; for tests
  // and for exercising the pipeline without a trained model.
  static StWeights random(const StMeta& meta, std::uint64_t seed, float scale = 0.3f);

  const StMeta& meta() const { return meta_; }
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  const MatrixF& embed_w() const { return embed_w_; }
  const VectorF& embed_b() const { return embed_b_; }
  const std::vector<IsabWeights>& isabs() const { return isabs_; }
  const MatrixF& pma_seeds() const { return pma_seeds_; }
  const MabWeights& pma() const { return pma_; }
  const MabWeights& point_decoder() const { return point_; }
  const VectorF& head_w() const { return head_w_; }
  float head_b() const { return head_b_; }

  // Canonical tensor names and shapes implied by a meta block, in file order.
  static std::vector<std::pair<std::string, std::vector<std::uint32_t>>> layout(const StMeta& meta);

 private:
  StMeta meta_;
  std::map<std::string, Tensor> tensors_;
  MatrixF embed_w_;
  VectorF embed_b_;
  std::vector<IsabWeights> isabs_;
  MatrixF pma_seeds_;
  MabWeights pma_;
  MabWeights point_;
  VectorF head_w_;
  float head_b_ = 0.0f;
};

// softmax(Q K^T / sqrt(d_q)) V, softmax taken row-wise.
MatrixF attention(const MatrixF& q, const MatrixF& k, const MatrixF& v);

// concat(O_1..O_h) W^O with O_j = Att(Q W^Q_j, K W^K_j, V W^V_j).
MatrixF multihead_att(const MatrixF& q, const MatrixF& k, const MatrixF& v, const MabWeights& w,
                      std::uint32_t heads);

// Row-wise affine map followed by ReLU.
MatrixF rff(const MatrixF& x, const MatrixF& w, const VectorF& b);

// H = X + rFF(MHA(X, Y)); MAB(X, Y) = H + rFF(H).
MatrixF mab(const MatrixF& x, const MatrixF& y, const MabWeights& w, std::uint32_t heads);

// MAB(X, MAB(I, X)).
MatrixF isab(const MatrixF& x, const IsabWeights& w, std::uint32_t heads);

// One logit per row of `x` (N x D).
VectorF set_transformer_forward(const MatrixF& x, const StWeights& weights);

// Weight file: "SPLTNET1", six u32 meta fields, u32 tensor count, then per
// tensor u16 name length, name, u8 rank, rank x u32 dims, f32 payload.
// Little-endian throughout.
StWeights load_weights(const std::filesystem::path& path);
void save_weights(const StWeights& weights, const std::filesystem::path& path);

}  // namespace subsplit::st
