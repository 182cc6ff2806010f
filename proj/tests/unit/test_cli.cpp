#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>

#include "../support/fixtures.hpp"
#include "smotext/corpus.hpp"
#include "smotext/store.hpp"

using testsupport::TempDir;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(SMOTEXT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string fixture_corpus(const TempDir& dir) {
  smotext::Corpus corpus = testsupport::make_topic_corpus(2, 5, 99);
  std::string path = dir.str("corpus.jsonl");
  smotext::write_corpus_jsonl(corpus, path);
  return path;
}

}  // namespace

TEST_CASE("cli exits 0 on a successful augment") {
  TempDir dir("cli-ok");
  std::string corpus = fixture_corpus(dir);
  int rc = run_cli("augment --corpus " + corpus + " --seed 5 --out " + dir.str("out") +
                   " --plan_target budget --budget 6 --mock_dim 32");
  CHECK(rc == 0);
  CHECK(std::filesystem::exists(dir.str("out/synthetic/synthetic.smtx")));
  CHECK(std::filesystem::exists(dir.str("out/run_manifest.json")));
}

TEST_CASE("cli exits 2 on config errors") {
  TempDir dir("cli-config");
  CHECK(run_cli("augment") == 2);  // missing corpus
  CHECK(run_cli("") == 2);         // missing subcommand
  std::string corpus = fixture_corpus(dir);
  CHECK(run_cli("augment --corpus " + corpus + " --out " + dir.str("out") +
                " --plan_target budget --budget 4") == 2);  // missing seed
  CHECK(run_cli("augment --corpus " + corpus + " --seed 1 --out " + dir.str("out") +
                " --plan_target nonsense") == 2);
}

TEST_CASE("cli exits 3 on backend errors") {
  TempDir dir("cli-backend");
  std::string corpus = fixture_corpus(dir);
  int rc = run_cli("augment --corpus " + corpus + " --seed 5 --out " + dir.str("out") +
                   " --plan_target budget --budget 4 --encoder http://127.0.0.1:9" +
                   " --timeout_seconds 2");
  CHECK(rc == 3);
}

TEST_CASE("cli exits 4 on data errors") {
  TempDir dir("cli-data");
  CHECK(run_cli("augment --corpus " + dir.str("missing.jsonl") +
                " --seed 5 --out " + dir.str("out") +
                " --plan_target budget --budget 4") == 4);
  CHECK(run_cli("inspect " + dir.str("missing.smtx")) == 4);
}

TEST_CASE("cli inspect works on a written store") {
  TempDir dir("cli-inspect");
  smotext::VectorStore s(4);
  s.add("one", "a", smotext::EmbeddingVector({1.0f, 0.0f, 0.0f, 0.0f}));
  s.add("two", "a", smotext::EmbeddingVector({0.0f, 1.0f, 0.0f, 0.0f}));
  std::string path = dir.str("store.smtx");
  smotext::write_store(s, path);
  CHECK(run_cli("inspect " + path) == 0);
  CHECK(run_cli("inspect --store " + path) == 0);
  CHECK(run_cli("inspect") == 2);  // no path at all
}

TEST_CASE("cli config file plus flag overrides drive a run") {
  TempDir dir("cli-configfile");
  std::string corpus = fixture_corpus(dir);
  std::string config = dir.str("run.json");
  testsupport::write_bytes(config, std::string("{\n") +
                                       "  \"corpus\": \"" + corpus + "\",\n" +
                                       "  \"plan_target\": \"budget\",\n" +
                                       "  \"budget\": 4,\n" +
                                       "  \"mock_dim\": 32,\n" +
                                       "  \"out\": \"" + dir.str("out-a") + "\"\n" +
                                       "}\n");
  // seed intentionally left to the flag; out overridden as well
  CHECK(run_cli("augment --config " + config + " --seed 9 --out " + dir.str("out-b")) ==
        0);
  CHECK(!std::filesystem::exists(dir.str("out-a")));
  CHECK(std::filesystem::exists(dir.str("out-b/synthetic/provenance.jsonl")));
}

TEST_CASE("cli eval emits the three reports") {
  TempDir dir("cli-eval");
  smotext::Corpus corpus = testsupport::make_topic_corpus(2, 12, 424242);
  std::string path = dir.str("corpus.jsonl");
  smotext::write_corpus_jsonl(corpus, path);
  int rc = run_cli("eval --corpus " + path + " --seed 3 --out " + dir.str("out") +
                   " --plan_target budget --budget 8 --split_fraction 0.5" +
                   " --mock_dim 32 --iters 40");
  CHECK(rc == 0);
  CHECK(std::filesystem::exists(dir.str("out/reports/real_only.json")));
  CHECK(std::filesystem::exists(dir.str("out/reports/real_plus_synthetic.json")));
  CHECK(std::filesystem::exists(dir.str("out/reports/synthetic_only.json")));
}
