#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "subsplit/error.hpp"
#include "subsplit/set_transformer.hpp"

namespace subsplit::st {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'L', 'T', 'N', 'E', 'T', '1'};

class Reader {
 public:
  explicit Reader(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {}

  std::uint64_t read_le(std::size_t width) {
    need(width);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += width;
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(read_le(4)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(read_le(2)); }
  std::uint8_t u8() { return static_cast<std::uint8_t>(read_le(1)); }
  float f32() { return std::bit_cast<float>(u32()); }

  std::string str(std::size_t len) {
    need(len);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
    pos_ += len;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(Errc::CorruptTensor, "weight file is truncated");
    }
  }

  std::vector<unsigned char> bytes_;
  std::size_t pos_ = 0;
};

class Writer {
 public:
  void le(std::uint64_t v, std::size_t width) {
    for (std::size_t i = 0; i < width; ++i) {
      bytes_.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
    }
  }
  void u32(std::uint32_t v) { le(v, 4); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u8(std::uint8_t v) { le(v, 1); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    bytes_.insert(bytes_.end(), p, p + len);
  }
  const std::vector<unsigned char>& bytes() const { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

}  // namespace

StWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::Io, "cannot open weight file " + path.string());
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(Errc::BadMagic, path.string() + " is not a SPLTNET1 weight file");
  }
  Reader r(std::vector<unsigned char>(bytes.begin() + sizeof(kMagic), bytes.end()));

  StMeta meta;
  meta.input_dim = r.u32();
  meta.hidden_dim = r.u32();
  meta.heads = r.u32();
  meta.inducing = r.u32();
  meta.isab_layers = r.u32();
  meta.seeds = r.u32();
  const std::uint32_t count = r.u32();

  std::map<std::string, Tensor> tensors;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint16_t name_len = r.u16();
    std::string name = r.str(name_len);
    const std::uint8_t rank = r.u8();
    if (rank < 1 || rank > 2) {
      throw Error(Errc::CorruptTensor, "tensor " + name + " has unsupported rank " + std::to_string(rank));
    }
    Tensor tensor;
    std::uint64_t elements = 1;
    for (std::uint8_t i = 0; i < rank; ++i) {
      tensor.dims.push_back(r.u32());
      elements *= tensor.dims.back();
    }
    if (elements * 4 > r.remaining()) {
      throw Error(Errc::CorruptTensor, "tensor " + name + " payload is truncated");
    }
    const Eigen::Index rows = rank == 2 ? tensor.dims[0] : 1;
    const Eigen::Index cols = rank == 2 ? tensor.dims[1] : tensor.dims[0];
    tensor.value.resize(rows, cols);
    for (Eigen::Index i = 0; i < tensor.value.size(); ++i) {
      tensor.value.data()[i] = r.f32();
    }
    if (!tensor.value.allFinite()) {
      throw Error(Errc::CorruptTensor, "tensor " + name + " holds NaN or Inf");
    }
    if (!tensors.emplace(std::move(name), std::move(tensor)).second) {
      throw Error(Errc::CorruptTensor, "duplicate tensor name");
    }
  }
  if (!r.at_end()) {
    throw Error(Errc::CorruptTensor, "trailing bytes after last tensor");
  }
  return StWeights::from_tensors(meta, std::move(tensors));
}

void save_weights(const StWeights& weights, const std::filesystem::path& path) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  const StMeta& meta = weights.meta();
  for (std::uint32_t v : {meta.input_dim, meta.hidden_dim, meta.heads, meta.inducing, meta.isab_layers, meta.seeds}) {
    w.u32(v);
  }
  const auto layout = StWeights::layout(meta);
  w.u32(static_cast<std::uint32_t>(layout.size()));
  for (const auto& [name, dims] : layout) {
    const Tensor& t = weights.tensors().at(name);
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name.data(), name.size());
    w.u8(static_cast<std::uint8_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) {
      w.u32(d);
    }
    for (Eigen::Index i = 0; i < t.value.size(); ++i) {
      w.f32(t.value.data()[i]);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(Errc::Io, "cannot write weight file " + path.string());
  }
  out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
}

}  // namespace subsplit::st
