#include "subsplit/set_transformer.hpp"

#include <cmath>
#include <random>

#include "subsplit/error.hpp"

namespace subsplit::st {

namespace {

constexpr const char* kMabParts[] = {"wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo",
                                     "ff_in_w", "ff_in_b", "ff_out_w", "ff_out_b"};

void append_mab(std::vector<std::pair<std::string, std::vector<std::uint32_t>>>& out, const std::string& prefix,
                std::uint32_t dh) {
  for (const char* part : kMabParts) {
    const std::string name = prefix + "." + part;
    const bool bias = std::string_view(part).ends_with("_b") || std::string_view(part).starts_with("b");
    if (bias) {
      out.push_back({name, {dh}});
    } else {
      out.push_back({name, {dh, dh}});
    }
  }
}

const Tensor& fetch(const std::map<std::string, Tensor>& tensors, const std::string& name) {
  const auto it = tensors.find(name);
  if (it == tensors.end()) {
    throw Error(Errc::ShapeMismatch, "missing tensor " + name);
  }
  return it->second;
}

VectorF as_vector(const Tensor& t) { return Eigen::Map<const VectorF>(t.value.data(), t.value.size()); }

MabWeights fetch_mab(const std::map<std::string, Tensor>& tensors, const std::string& prefix) {
  MabWeights w;
  w.wq = fetch(tensors, prefix + ".wq").value;
  w.bq = as_vector(fetch(tensors, prefix + ".bq"));
  w.wk = fetch(tensors, prefix + ".wk").value;
  w.bk = as_vector(fetch(tensors, prefix + ".bk"));
  w.wv = fetch(tensors, prefix + ".wv").value;
  w.bv = as_vector(fetch(tensors, prefix + ".bv"));
  w.wo = fetch(tensors, prefix + ".wo").value;
  w.bo = as_vector(fetch(tensors, prefix + ".bo"));
  w.ff_in_w = fetch(tensors, prefix + ".ff_in_w").value;
  w.ff_in_b = as_vector(fetch(tensors, prefix + ".ff_in_b"));
  w.ff_out_w = fetch(tensors, prefix + ".ff_out_w").value;
  w.ff_out_b = as_vector(fetch(tensors, prefix + ".ff_out_b"));
  return w;
}

MatrixF affine(const MatrixF& x, const MatrixF& w, const VectorF& b) {
  MatrixF out = x * w;
  out.rowwise() += b.transpose();
  return out;
}

}  // namespace

std::vector<std::pair<std::string, std::vector<std::uint32_t>>> StWeights::layout(const StMeta& meta) {
  const std::uint32_t dh = meta.hidden_dim;
  std::vector<std::pair<std::string, std::vector<std::uint32_t>>> out;
  out.push_back({"embed.w", {meta.input_dim, dh}});
  out.push_back({"embed.b", {dh}});
  for (std::uint32_t l = 0; l < meta.isab_layers; ++l) {
    const std::string prefix = "enc.isab" + std::to_string(l);
    out.push_back({prefix + ".inducing", {meta.inducing, dh}});
    append_mab(out, prefix + ".mab_inner", dh);
    append_mab(out, prefix + ".mab_outer", dh);
  }
  out.push_back({"dec.pma.seeds", {meta.seeds, dh}});
  append_mab(out, "dec.pma.mab", dh);
  append_mab(out, "dec.point.mab", dh);
  out.push_back({"head.w", {dh}});
  out.push_back({"head.b", {1}});
  return out;
}

StWeights StWeights::from_tensors(const StMeta& meta, std::map<std::string, Tensor> tensors) {
  if (meta.input_dim == 0 || meta.hidden_dim == 0 || meta.heads == 0 || meta.inducing == 0) {
    throw Error(Errc::InvalidWeights, "zero-sized architecture field");
  }
  if (meta.hidden_dim % meta.heads != 0) {
    throw Error(Errc::InvalidWeights, "hidden dim " + std::to_string(meta.hidden_dim) +
                                          " is not divisible by head count " + std::to_string(meta.heads));
  }
  if (meta.seeds != 2) {
    throw Error(Errc::InvalidWeights, "PMA seed count must be 2");
  }
  const auto expected = layout(meta);
  if (tensors.size() != expected.size()) {
    throw Error(Errc::ShapeMismatch, "expected " + std::to_string(expected.size()) + " tensors, got " +
                                         std::to_string(tensors.size()));
  }
  for (const auto& [name, dims] : expected) {
    const Tensor& t = fetch(tensors, name);
    if (t.dims != dims) {
      throw Error(Errc::ShapeMismatch, "tensor " + name + " has unexpected shape");
    }
    if (!t.value.allFinite()) {
      throw Error(Errc::CorruptTensor, "tensor " + name + " holds NaN or Inf");
    }
  }

  StWeights w;
  w.meta_ = meta;
  w.embed_w_ = fetch(tensors, "embed.w").value;
  w.embed_b_ = as_vector(fetch(tensors, "embed.b"));
  for (std::uint32_t l = 0; l < meta.isab_layers; ++l) {
    const std::string prefix = "enc.isab" + std::to_string(l);
    IsabWeights isab_w;
    isab_w.inducing = fetch(tensors, prefix + ".inducing").value;
    isab_w.inner = fetch_mab(tensors, prefix + ".mab_inner");
    isab_w.outer = fetch_mab(tensors, prefix + ".mab_outer");
    w.isabs_.push_back(std::move(isab_w));
  }
  w.pma_seeds_ = fetch(tensors, "dec.pma.seeds").value;
  w.pma_ = fetch_mab(tensors, "dec.pma.mab");
  w.point_ = fetch_mab(tensors, "dec.point.mab");
  w.head_w_ = as_vector(fetch(tensors, "head.w"));
  w.head_b_ = fetch(tensors, "head.b").value(0, 0);
  w.tensors_ = std::move(tensors);
  return w;
}

StWeights StWeights::random(const StMeta& meta, std::uint64_t seed, float scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::map<std::string, Tensor> tensors;
  for (const auto& [name, dims] : layout(meta)) {
    Tensor t;
    t.dims = dims;
    const Eigen::Index rows = dims.size() == 2 ? dims[0] : 1;
    const Eigen::Index cols = dims.size() == 2 ? dims[1] : dims[0];
    t.value.resize(rows, cols);
    // fan-in scaling keeps activations O(1) through the residual stack
    const float fan_in = dims.size() == 2 ? static_cast<float>(dims[0]) : 1.0f;
    const float s = scale / std::sqrt(fan_in);
    for (Eigen::Index i = 0; i < t.value.size(); ++i) {
      t.value.data()[i] = s * normal(rng);
    }
    tensors.emplace(name, std::move(t));
  }
  return from_tensors(meta, std::move(tensors));
}

MatrixF attention(const MatrixF& q, const MatrixF& k, const MatrixF& v) {
  const float scale = 1.0f / std::sqrt(static_cast<float>(q.cols()));
  MatrixF scores = (q * k.transpose()) * scale;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    auto row = scores.row(i);
    const float peak = row.maxCoeff();
    row = (row.array() - peak).exp();
    row /= row.sum();
  }
  return scores * v;
}

MatrixF multihead_att(const MatrixF& q, const MatrixF& k, const MatrixF& v, const MabWeights& w,
                      std::uint32_t heads) {
  const MatrixF qp = affine(q, w.wq, w.bq);
  const MatrixF kp = affine(k, w.wk, w.bk);
  const MatrixF vp = affine(v, w.wv, w.bv);
  const Eigen::Index dh = qp.cols();
  const Eigen::Index width = dh / heads;
  MatrixF concat(q.rows(), dh);
  for (std::uint32_t j = 0; j < heads; ++j) {
    const Eigen::Index c0 = j * width;
    concat.middleCols(c0, width) =
        attention(qp.middleCols(c0, width), kp.middleCols(c0, width), vp.middleCols(c0, width));
  }
  return affine(concat, w.wo, w.bo);
}

MatrixF rff(const MatrixF& x, const MatrixF& w, const VectorF& b) { return affine(x, w, b).cwiseMax(0.0f); }

MatrixF mab(const MatrixF& x, const MatrixF& y, const MabWeights& w, std::uint32_t heads) {
  const MatrixF h = x + rff(multihead_att(x, y, y, w, heads), w.ff_in_w, w.ff_in_b);
  return h + rff(h, w.ff_out_w, w.ff_out_b);
}

MatrixF isab(const MatrixF& x, const IsabWeights& w, std::uint32_t heads) {
  const MatrixF induced = mab(w.inducing, x, w.inner, heads);
  return mab(x, induced, w.outer, heads);
}

VectorF set_transformer_forward(const MatrixF& x, const StWeights& weights) {
  const StMeta& meta = weights.meta();
  if (x.cols() != static_cast<Eigen::Index>(meta.input_dim)) {
    throw Error(Errc::DimensionMismatch, "input has " + std::to_string(x.cols()) + " columns, model expects " +
                                             std::to_string(meta.input_dim));
  }
  MatrixF h = affine(x, weights.embed_w(), weights.embed_b());
  for (const IsabWeights& block : weights.isabs()) {
    h = isab(h, block, meta.heads);
  }
  const MatrixF summary = mab(weights.pma_seeds(), h, weights.pma(), meta.heads);
  const MatrixF per_point = mab(h, summary, weights.point_decoder(), meta.heads);
  VectorF logits = per_point * weights.head_w();
  logits.array() += weights.head_b();
  return logits;
}

}  // namespace subsplit::st
