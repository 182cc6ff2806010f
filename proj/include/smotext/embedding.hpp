#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "smotext/error.hpp"
#include "smotext/parallel.hpp"
#include "smotext/rng.hpp"

namespace smotext {

/// Fixed-dimension real vector, 32-bit components. The dimension is the
/// component count; all entries are expected finite (validated at the
/// boundaries that produce vectors: encoders, store reads, projector loads).
struct EmbeddingVector {
  std::vector<float> values;

  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<float> v) : values(std::move(v)) {}

  std::size_t dim() const { return values.size(); }
  float operator[](std::size_t i) const { return values[i]; }
  float& operator[](std::size_t i) { return values[i]; }

  bool operator==(const EmbeddingVector& o) const { return values == o.values; }
};

inline bool all_finite(const EmbeddingVector& v) {
  for (float x : v.values)
    if (!std::isfinite(x)) return false;
  return true;
}

inline double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    s += static_cast<double>(a.values[i]) * static_cast<double>(b.values[i]);
  return s;
}

inline double norm(const EmbeddingVector& v) { return std::sqrt(dot(v, v)); }

/// Cosine similarity; a degenerate (near-zero norm) side contributes
/// similarity 0 rather than NaN.
inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  double na = norm(a), nb = norm(b);
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return dot(a, b) / (na * nb);
}

inline double euclidean_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    double d = static_cast<double>(a.values[i]) - static_cast<double>(b.values[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

/// Scale to unit L2 norm. Near-zero input is an error.
inline EmbeddingVector l2_normalize(const EmbeddingVector& v) {
  double n = norm(v);
  if (n < 1e-12) throw DataError("l2_normalize: vector norm is near zero");
  EmbeddingVector out;
  out.values.reserve(v.dim());
  for (float x : v.values)
    out.values.push_back(static_cast<float>(static_cast<double>(x) / n));
  return out;
}

namespace detail {
inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  return out;
}
}  // namespace detail

/// Deterministic desk-scale text encoder: signed trigram feature hashing.
///
/// Rule: ASCII-lowercase the text, take every consecutive 3-byte window,
/// hash it with FNV-1a 64; bucket = hash mod dim, sign from the next bit of
/// the hash above the bucket ((hash / dim) & 1). Accumulate signed counts
/// and L2-normalize. Signed hashing gives unrelated texts a near-zero
/// expected dot product, so topic separation is testable without a real
/// encoder. Pure function: equal inputs give bitwise-equal outputs.
inline EmbeddingVector mock_encode(std::string_view text, std::size_t dim) {
  if (dim < 8) throw ConfigError("mock_encode: dim must be >= 8");
  std::string s = detail::ascii_lower(text);
  if (s.size() < 3)
    throw DataError("mock_encode: text shorter than 3 characters, no trigram");
  std::vector<std::int64_t> acc(dim, 0);
  for (std::size_t i = 0; i + 3 <= s.size(); ++i) {
    std::uint64_t h = fnv1a64(std::string_view(s).substr(i, 3));
    std::uint64_t bucket = h % dim;
    acc[bucket] += ((h / dim) & 1u) == 0 ? 1 : -1;
  }
  double sq = 0.0;
  for (auto a : acc) sq += static_cast<double>(a) * static_cast<double>(a);
  double n = std::sqrt(sq);
  if (n < 1e-12)
    throw DataError("mock_encode: trigram signs cancelled to a zero vector");
  EmbeddingVector out;
  out.values.reserve(dim);
  for (auto a : acc)
    out.values.push_back(static_cast<float>(static_cast<double>(a) / n));
  return out;
}

/// Text encoder backend. Implementations must report a constant dimension
/// for the lifetime of the session and be deterministic per text (the
/// pipeline additionally caches by example id so that each example is
/// embedded exactly once).
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
  /// Encode texts in order; one vector per text. Contract checks (ordering,
  /// dimension, finiteness) are applied by encode_batch.
  virtual std::vector<EmbeddingVector> encode(const std::vector<std::string>& texts) = 0;
};

/// In-process deterministic backend over mock_encode.
class MockEncoder final : public Encoder {
 public:
  explicit MockEncoder(std::size_t dim = 256, unsigned threads = 1)
      : dim_(dim), threads_(threads) {
    if (dim < 8) throw ConfigError("mock encoder: dim must be >= 8");
  }

  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "mock"; }

  std::vector<EmbeddingVector> encode(const std::vector<std::string>& texts) override {
    std::vector<EmbeddingVector> out(texts.size());
    detail::parallel_for(texts.size(), threads_,
                         [&](std::size_t i) { out[i] = mock_encode(texts[i], dim_); });
    return out;
  }

 private:
  std::size_t dim_;
  unsigned threads_;
};

/// Validated batch encoding: one vector per text, input order preserved,
/// session dimension and finiteness enforced.
inline std::vector<EmbeddingVector> encode_batch(Encoder& backend,
                                                 const std::vector<std::string>& texts) {
  for (std::size_t i = 0; i < texts.size(); ++i)
    if (texts[i].empty())
      throw DataError("encode_batch: empty text at index " + std::to_string(i));
  std::vector<EmbeddingVector> out = backend.encode(texts);
  if (out.size() != texts.size())
    throw BackendError("encode_batch: backend returned " + std::to_string(out.size()) +
                       " vectors for " + std::to_string(texts.size()) + " texts");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].dim() != backend.dim())
      throw BackendError("encode_batch: vector " + std::to_string(i) + " has dim " +
                         std::to_string(out[i].dim()) + ", session dim is " +
                         std::to_string(backend.dim()));
    if (!all_finite(out[i]))
      throw BackendError("encode_batch: backend returned non-finite values at index " +
                         std::to_string(i));
  }
  return out;
}

}  // namespace smotext
