#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "smotext/bytes.hpp"
#include "smotext/embedding.hpp"
#include "smotext/error.hpp"

namespace smotext {

/// Linear modality bridge: maps an encoder-space vector into the decoder's
/// input space. Row-major out_dim x in_dim weights, optional bias.
/// Immutable after construction; concurrent projection is safe.
class Projector {
 public:
  Projector(std::uint32_t in_dim, std::uint32_t out_dim, std::vector<float> weights,
            std::vector<float> bias = {})
      : in_dim_(in_dim), out_dim_(out_dim), weights_(std::move(weights)),
        bias_(std::move(bias)) {
    if (in_dim_ == 0 || out_dim_ == 0)
      throw DataError("projector: dimensions must be positive");
    if (weights_.size() != static_cast<std::size_t>(in_dim_) * out_dim_)
      throw DataError("projector: weight count " + std::to_string(weights_.size()) +
                      " does not match declared " + std::to_string(out_dim_) + "x" +
                      std::to_string(in_dim_));
    if (!bias_.empty() && bias_.size() != out_dim_)
      throw DataError("projector: bias length " + std::to_string(bias_.size()) +
                      " does not match out_dim " + std::to_string(out_dim_));
    for (float w : weights_)
      if (!std::isfinite(w)) throw DataError("projector: non-finite weight");
    for (float b : bias_)
      if (!std::isfinite(b)) throw DataError("projector: non-finite bias");
  }

  /// Square identity map, no bias.
  static Projector identity(std::uint32_t dim) {
    if (dim < 1) throw DataError("projector: dim must be >= 1");
    std::vector<float> w(static_cast<std::size_t>(dim) * dim, 0.0f);
    for (std::uint32_t i = 0; i < dim; ++i)
      w[static_cast<std::size_t>(i) * dim + i] = 1.0f;
    return Projector(dim, dim, std::move(w));
  }

  std::uint32_t in_dim() const { return in_dim_; }
  std::uint32_t out_dim() const { return out_dim_; }
  bool has_bias() const { return !bias_.empty(); }
  const std::vector<float>& weights() const { return weights_; }
  const std::vector<float>& bias() const { return bias_; }

  /// out = W * e (+ bias). Rows accumulated in double, stored as float32.
  EmbeddingVector project(const EmbeddingVector& e) const {
    if (e.dim() != in_dim_)
      throw DataError("project: vector dim " + std::to_string(e.dim()) +
                      " does not match projector in_dim " + std::to_string(in_dim_));
    EmbeddingVector out;
    out.values.reserve(out_dim_);
    for (std::uint32_t r = 0; r < out_dim_; ++r) {
      const float* row = weights_.data() + static_cast<std::size_t>(r) * in_dim_;
      double acc = bias_.empty() ? 0.0 : static_cast<double>(bias_[r]);
      for (std::uint32_t c = 0; c < in_dim_; ++c)
        acc += static_cast<double>(row[c]) * static_cast<double>(e.values[c]);
      out.values.push_back(static_cast<float>(acc));
    }
    return out;
  }

 private:
  std::uint32_t in_dim_;
  std::uint32_t out_dim_;
  std::vector<float> weights_;
  std::vector<float> bias_;
};

inline EmbeddingVector project(const Projector& p, const EmbeddingVector& e) {
  return p.project(e);
}

inline Projector identity_projector(std::uint32_t dim) { return Projector::identity(dim); }

namespace detail {
inline constexpr char kProjectorMagic[4] = {'S', 'M', 'P', 'W'};
inline constexpr std::uint32_t kProjectorVersion = 1;
}  // namespace detail

/// SMPW container, little-endian: magic "SMPW", version u32, in_dim u32,
/// out_dim u32, has_bias u8, row-major float32 weights, optional bias.
inline Projector load_projector(const std::string& path) {
  std::string buf = detail::read_file(path);
  if (buf.size() < 4 || std::string_view(buf.data(), 4) !=
                            std::string_view(detail::kProjectorMagic, 4))
    throw DataError(path + ": bad magic, not an SMPW projector");
  detail::ByteReader r(buf, path);
  r.bytes(4);
  std::uint32_t version = r.u32();
  if (version != detail::kProjectorVersion)
    throw DataError(path + ": unsupported projector version " + std::to_string(version));
  std::uint32_t in_dim = r.u32();
  std::uint32_t out_dim = r.u32();
  std::uint8_t has_bias = r.u8();
  if (has_bias > 1) throw DataError(path + ": has_bias flag must be 0 or 1");
  if (in_dim == 0 || out_dim == 0)
    throw DataError(path + ": projector dimensions must be positive");
  std::size_t expect = static_cast<std::size_t>(in_dim) * out_dim +
                       (has_bias ? out_dim : 0u);
  if (r.remaining() != expect * 4)
    throw DataError(path + ": declared " + std::to_string(out_dim) + "x" +
                    std::to_string(in_dim) + (has_bias ? "+bias" : "") + " needs " +
                    std::to_string(expect) + " floats, file holds " +
                    std::to_string(r.remaining() / 4));
  std::vector<float> weights;
  weights.reserve(static_cast<std::size_t>(in_dim) * out_dim);
  for (std::size_t i = 0; i < static_cast<std::size_t>(in_dim) * out_dim; ++i)
    weights.push_back(r.f32());
  std::vector<float> bias;
  if (has_bias) {
    bias.reserve(out_dim);
    for (std::uint32_t i = 0; i < out_dim; ++i) bias.push_back(r.f32());
  }
  return Projector(in_dim, out_dim, std::move(weights), std::move(bias));
}

inline void write_projector(const Projector& p, const std::string& path) {
  std::string buf;
  buf.append(detail::kProjectorMagic, 4);
  detail::put_u32(buf, detail::kProjectorVersion);
  detail::put_u32(buf, p.in_dim());
  detail::put_u32(buf, p.out_dim());
  buf.push_back(p.has_bias() ? '\x01' : '\x00');
  for (float w : p.weights()) detail::put_f32(buf, w);
  for (float b : p.bias()) detail::put_f32(buf, b);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write projector file: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("short write to projector file: " + path);
}

}  // namespace smotext
