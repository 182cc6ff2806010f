#pragma once

// Shared test scaffolding: temp directories, deterministic fixture corpora,
// and seeded random vectors. Everything here is driven by explicit streams
// so tests are reproducible bit for bit. Framework-agnostic: failures throw.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "smotext/corpus.hpp"
#include "smotext/embedding.hpp"
#include "smotext/rng.hpp"

namespace testsupport {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    namespace fs = std::filesystem;
    static std::atomic<std::uint64_t> counter{0};
    path_ = fs::temp_directory_path() /
            ("smotext-test-" + tag + "-" + std::to_string(counter.fetch_add(1)) + "-" +
             std::to_string(std::random_device{}()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& rel = "") const {
    return rel.empty() ? path_.string() : (path_ / rel).string();
  }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("test support: cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("test support: cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

/// Topic corpus with per-class-disjoint vocabularies. Words carry a
/// class-distinct prefix, so no word is shared across classes; texts are
/// fixed-length sequences of class words.
inline smotext::Corpus make_topic_corpus(std::size_t num_classes,
                                         std::size_t per_class, std::uint64_t seed,
                                         std::size_t vocab_size = 24,
                                         std::size_t words_per_text = 10) {
  static const char* prefixes[] = {"zyq", "jxo", "vuk", "wme", "qaf", "bli"};
  if (num_classes > 6)
    throw std::runtime_error("make_topic_corpus supports at most 6 classes");
  smotext::Corpus corpus;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::string label = "topic" + std::to_string(c);
    std::vector<std::string> vocab;
    smotext::SplitMix64 vrng = smotext::derive_stream(seed, "vocab", label, 0);
    for (std::size_t w = 0; w < vocab_size; ++w) {
      std::string word = prefixes[c];
      for (int k = 0; k < 4; ++k)
        word.push_back(static_cast<char>('a' + vrng.below(26)));
      vocab.push_back(word);
    }
    for (std::size_t i = 0; i < per_class; ++i) {
      smotext::SplitMix64 trng = smotext::derive_stream(seed, "text", label, i);
      std::string text;
      for (std::size_t w = 0; w < words_per_text; ++w) {
        if (!text.empty()) text.push_back(' ');
        text += vocab[trng.below(vocab.size())];
      }
      corpus.add({label + "-" + std::to_string(i), text, label});
    }
  }
  return corpus;
}

/// Standard normal via Box-Muller on explicit uniform draws.
inline double gaussian(smotext::SplitMix64& rng) {
  double u1 = rng.uniform01();
  double u2 = rng.uniform01();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline smotext::EmbeddingVector random_vector(smotext::SplitMix64& rng, std::size_t dim,
                                              double scale = 1.0) {
  smotext::EmbeddingVector v;
  v.values.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i)
    v.values.push_back(static_cast<float>(gaussian(rng) * scale));
  return v;
}

}  // namespace testsupport
