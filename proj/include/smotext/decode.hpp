#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "smotext/embedding.hpp"
#include "smotext/error.hpp"
#include "smotext/store.hpp"

namespace smotext {

/// Decoder backend: turns a projected latent vector into text.
class Decoder {
 public:
  virtual ~Decoder() = default;
  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
  virtual std::string decode_raw(const EmbeddingVector& h) = 0;
};

namespace detail {

inline std::vector<std::string> whitespace_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

}  // namespace detail

/// Deterministic desk-scale decoder: blend the texts of the two reference
/// entries nearest to h.
///
/// Rule: rank reference entries by cosine similarity to h (ties by entry
/// index); call the top two A and B. Shift both similarities by
/// -min(s_A, s_B, 0) so they are non-negative, set p = s_A / (s_A + s_B)
/// (p = 1 when the denominator is 0), and emit the first ceil(p * n_A)
/// whitespace tokens of A's text followed by the first ceil((1-p) * n_B)
/// tokens of B's text, joined by single spaces.
inline std::string mock_decode(const EmbeddingVector& h, const VectorStore& reference,
                               const std::function<std::string(const std::string&)>& resolver) {
  if (reference.size() < 2)
    throw DataError("mock_decode: reference store needs at least 2 entries");
  if (h.dim() != reference.dim())
    throw DataError("mock_decode: vector dim " + std::to_string(h.dim()) +
                    " does not match reference dim " + std::to_string(reference.dim()));

  std::size_t best = 0, second = 1;
  double best_sim = -2.0, second_sim = -2.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    double sim = cosine_similarity(h, reference.entries()[i].vec);
    if (sim > best_sim) {
      second = best;
      second_sim = best_sim;
      best = i;
      best_sim = sim;
    } else if (sim > second_sim) {
      second = i;
      second_sim = sim;
    }
  }

  double shift = std::min(std::min(best_sim, second_sim), 0.0);
  double s_a = best_sim - shift;
  double s_b = second_sim - shift;
  double p = (s_a + s_b) > 0.0 ? s_a / (s_a + s_b) : 1.0;

  auto tokens_a = detail::whitespace_tokens(resolver(reference.entries()[best].id));
  auto tokens_b = detail::whitespace_tokens(resolver(reference.entries()[second].id));
  auto take_a = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(tokens_a.size())));
  auto take_b = static_cast<std::size_t>(
      std::ceil((1.0 - p) * static_cast<double>(tokens_b.size())));
  take_a = std::min(take_a, tokens_a.size());
  take_b = std::min(take_b, tokens_b.size());

  std::string out;
  for (std::size_t i = 0; i < take_a; ++i) {
    if (!out.empty()) out.push_back(' ');
    out += tokens_a[i];
  }
  for (std::size_t i = 0; i < take_b; ++i) {
    if (!out.empty()) out.push_back(' ');
    out += tokens_b[i];
  }
  return out;
}

/// In-process deterministic backend over mock_decode. The resolver maps a
/// reference entry id to its source text (typically corpus lookup).
class MockDecoder final : public Decoder {
 public:
  MockDecoder(const VectorStore& reference,
              std::function<std::string(const std::string&)> resolver)
      : reference_(reference), resolver_(std::move(resolver)) {
    if (reference_.size() < 2)
      throw DataError("mock decoder: reference store needs at least 2 entries");
  }

  std::size_t dim() const override { return reference_.dim(); }
  std::string name() const override { return "mock"; }

  std::string decode_raw(const EmbeddingVector& h) override {
    return mock_decode(h, reference_, resolver_);
  }

 private:
  const VectorStore& reference_;
  std::function<std::string(const std::string&)> resolver_;
};

/// Validated decode: dimension check, non-empty output contract.
inline std::string decode(Decoder& backend, const EmbeddingVector& h) {
  if (h.dim() != backend.dim())
    throw DataError("decode: vector dim " + std::to_string(h.dim()) +
                    " does not match backend dim " + std::to_string(backend.dim()));
  std::string text = backend.decode_raw(h);
  if (text.empty())
    throw BackendError("decode: backend \"" + backend.name() + "\" returned empty text");
  return text;
}

/// A prompt template must contain the vector placeholder "[X]" exactly once.
inline void validate_prompt_template(const std::string& tmpl) {
  std::size_t first = tmpl.find("[X]");
  if (first == std::string::npos)
    throw ConfigError("prompt template must contain the placeholder [X]");
  if (tmpl.find("[X]", first + 1) != std::string::npos)
    throw ConfigError("prompt template must contain [X] exactly once");
}

}  // namespace smotext
