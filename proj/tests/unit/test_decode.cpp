#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "../support/fixtures.hpp"
#include "smotext/bridge.hpp"
#include "smotext/decode.hpp"
#include "smotext/latent.hpp"

using namespace smotext;

namespace {

struct BlendFixture {
  VectorStore store{4};
  std::map<std::string, std::string> texts;

  BlendFixture() {
    store.add("A", "c", EmbeddingVector({1.0f, 0.0f, 0.0f, 0.0f}));
    store.add("B", "c", EmbeddingVector({0.0f, 1.0f, 0.0f, 0.0f}));
    texts["A"] = "a b c d";
    texts["B"] = "w x";
  }

  std::function<std::string(const std::string&)> resolver() {
    return [this](const std::string& id) { return texts.at(id); };
  }
};

}  // namespace

TEST_CASE("mock_decode returns the full nearest text when h matches it") {
  BlendFixture fx;
  EmbeddingVector h({1.0f, 0.0f, 0.0f, 0.0f});
  CHECK(mock_decode(h, fx.store, fx.resolver()) == "a b c d");
}

TEST_CASE("mock_decode blends token prefixes at the similarity ratio") {
  BlendFixture fx;
  // equidistant from A and B: p = 1/2, ceil(0.5*4)=2 tokens of A,
  // ceil(0.5*2)=1 token of B
  EmbeddingVector h({1.0f, 1.0f, 0.0f, 0.0f});
  CHECK(mock_decode(h, fx.store, fx.resolver()) == "a b w");
}

TEST_CASE("mock_decode shifts negative similarities before mixing") {
  BlendFixture fx;
  // h = -A: similarity to A is -1, to B is 0, so B is nearest with p = 1
  EmbeddingVector h({-1.0f, 0.0f, 0.0f, 0.0f});
  CHECK(mock_decode(h, fx.store, fx.resolver()) == "w x");
}

TEST_CASE("mock_decode collapses internal whitespace") {
  BlendFixture fx;
  fx.texts["A"] = "  a\t\tb   c\nd  ";
  EmbeddingVector h({1.0f, 0.0f, 0.0f, 0.0f});
  CHECK(mock_decode(h, fx.store, fx.resolver()) == "a b c d");
}

TEST_CASE("mock_decode breaks similarity ties by entry index") {
  VectorStore s(2);
  s.add("first", "c", EmbeddingVector({1.0f, 0.0f}));
  s.add("second", "c", EmbeddingVector({1.0f, 0.0f}));
  s.add("far", "c", EmbeddingVector({0.0f, 1.0f}));
  auto resolver = [](const std::string& id) -> std::string {
    if (id == "first") return "one two";
    if (id == "second") return "three four";
    return "five six";
  };
  // h parallel to the duplicates: both have similarity 1; "first" wins the
  // tie, "second" is runner-up, and the shifted ratio is 1/2.
  EmbeddingVector h({2.0f, 0.0f});
  CHECK(mock_decode(h, s, resolver) == "one three");
}

TEST_CASE("mock_decode validates the reference store") {
  VectorStore tiny(2);
  tiny.add("only", "c", EmbeddingVector({1.0f, 0.0f}));
  EmbeddingVector h({1.0f, 0.0f});
  CHECK_THROWS_AS(mock_decode(h, tiny, [](const std::string&) { return "t"; }),
                  DataError);

  BlendFixture fx;
  EmbeddingVector wrong_dim({1.0f, 0.0f});
  CHECK_THROWS_AS(mock_decode(wrong_dim, fx.store, fx.resolver()), DataError);
}

TEST_CASE("mock_decode is deterministic") {
  BlendFixture fx;
  EmbeddingVector h({0.7f, 0.3f, 0.0f, 0.0f});
  CHECK(mock_decode(h, fx.store, fx.resolver()) ==
        mock_decode(h, fx.store, fx.resolver()));
}

TEST_CASE("decode wraps backends with dimension and emptiness contracts") {
  BlendFixture fx;
  MockDecoder backend(fx.store, fx.resolver());
  CHECK(decode(backend, EmbeddingVector({1.0f, 0.0f, 0.0f, 0.0f})) == "a b c d");
  CHECK_THROWS_AS(decode(backend, EmbeddingVector({1.0f})), DataError);

  fx.texts["A"] = "";
  fx.texts["B"] = "";
  MockDecoder empty_backend(fx.store, fx.resolver());
  CHECK_THROWS_AS(decode(empty_backend, EmbeddingVector({1.0f, 0.0f, 0.0f, 0.0f})),
                  BackendError);
}

TEST_CASE("prompt templates must contain [X] exactly once") {
  CHECK_NOTHROW(validate_prompt_template("Paraphrase the content of [X]."));
  CHECK_THROWS_AS(validate_prompt_template("no placeholder"), ConfigError);
  CHECK_THROWS_AS(validate_prompt_template("[X] and [X]"), ConfigError);
}

TEST_CASE("decoded blends re-encode close to their class") {
  // Desk-scale locality: synthetic records decoded by the mock backend and
  // re-encoded land nearer their parents' class centroid than any other.
  Corpus corpus = testsupport::make_topic_corpus(4, 24, 1313);
  MockEncoder encoder(128);
  std::vector<std::string> texts;
  for (const auto& ex : corpus.examples()) texts.push_back(ex.text);
  auto vectors = encode_batch(encoder, texts);
  VectorStore store(128, corpus.label_set());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    store.add(corpus.examples()[i].id, corpus.examples()[i].label,
              std::move(vectors[i]));

  AugmentationPlan plan = build_plan(corpus.class_counts(), PlanTarget::budget(120), 5,
                                     LambdaPolicy::uniform(), 4242);
  auto records = generate_synthetic_vectors(store, plan);

  auto by_label = store.indices_by_label();
  std::vector<EmbeddingVector> centroids;
  for (const auto& members : by_label) {
    std::vector<double> sum(store.dim(), 0.0);
    for (std::size_t idx : members)
      for (std::size_t d = 0; d < store.dim(); ++d)
        sum[d] += static_cast<double>(store.entries()[idx].vec.values[d]);
    EmbeddingVector c;
    for (std::size_t d = 0; d < store.dim(); ++d)
      c.values.push_back(static_cast<float>(sum[d] / static_cast<double>(members.size())));
    centroids.push_back(std::move(c));
  }

  MockDecoder decoder(store, [&corpus](const std::string& id) {
    return corpus.by_id(id).text;
  });
  std::size_t considered = 0, local = 0;
  for (const auto& rec : records) {
    if (rec.lambda < 0.2 || rec.lambda > 0.8) continue;
    ++considered;
    std::string text = decode(decoder, rec.vec);
    EmbeddingVector re = mock_encode(text, 128);
    std::uint32_t own = store.by_id(rec.parent_a).label_id;
    double own_sim = cosine_similarity(re, centroids[own]);
    bool closest = true;
    for (std::size_t l = 0; l < centroids.size(); ++l)
      if (l != own && cosine_similarity(re, centroids[l]) >= own_sim) closest = false;
    if (closest) ++local;
  }
  REQUIRE(considered >= 30);
  CHECK(static_cast<double>(local) >= 0.9 * static_cast<double>(considered));
}
