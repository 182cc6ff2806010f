#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "smotext/remote.hpp"

using namespace smotext;

namespace {

/// Local HTTP test double bound to an ephemeral port.
class TestServer {
 public:
  TestServer() = default;

  template <typename Handler>
  void post(const std::string& pattern, Handler handler) {
    server_.Post(pattern, handler);
  }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~TestServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

RemoteOptions fast_options() {
  RemoteOptions opts;
  opts.timeout_seconds = 5.0;
  opts.backoff_ms = 1;
  return opts;
}

}  // namespace

TEST_CASE("remote encoder passes fixed vectors through verbatim") {
  TestServer server;
  server.post("/v1/embed", [](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json out;
    out["dim"] = 4;
    out["vectors"] = nlohmann::json::array();
    for (std::size_t i = 0; i < body["texts"].size(); ++i)
      out["vectors"].push_back({1.0, 2.0, 3.0, 4.0});
    res.set_content(out.dump(), "application/json");
  });
  server.start();

  RemoteEncoder enc(server.url(), fast_options());
  auto vectors = encode_batch(enc, {"one", "two"});
  REQUIRE(vectors.size() == 2);
  CHECK(enc.dim() == 4);
  CHECK(vectors[0] == EmbeddingVector({1.0f, 2.0f, 3.0f, 4.0f}));
  CHECK(vectors[1] == vectors[0]);
}

TEST_CASE("remote encoder reassembles concurrent batches in input order") {
  TestServer server;
  server.post("/v1/embed", [](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json out;
    out["dim"] = 2;
    out["vectors"] = nlohmann::json::array();
    for (const auto& t : body["texts"]) {
      std::string s = t.get<std::string>();
      out["vectors"].push_back({static_cast<double>(s.size()),
                                static_cast<double>(s.empty() ? 0 : s[0])});
    }
    res.set_content(out.dump(), "application/json");
  });
  server.start();

  RemoteOptions opts = fast_options();
  opts.batch_size = 2;
  opts.max_in_flight = 4;
  RemoteEncoder enc(server.url(), opts);
  std::vector<std::string> texts;
  for (int i = 0; i < 11; ++i) texts.push_back(std::string(i + 1, 'a' + i));
  auto vectors = encode_batch(enc, texts);
  REQUIRE(vectors.size() == texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    CHECK(vectors[i].values[0] == static_cast<float>(texts[i].size()));
    CHECK(vectors[i].values[1] == static_cast<float>(texts[i][0]));
  }
}

TEST_CASE("remote encoder rejects vectors that disagree with the response dim") {
  TestServer server;
  server.post("/v1/embed", [](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json out;
    out["dim"] = 4;
    out["vectors"] = nlohmann::json::array();
    for (std::size_t i = 0; i < body["texts"].size(); ++i)
      out["vectors"].push_back({1.0, 2.0, 3.0});  // three entries, dim says four
    res.set_content(out.dump(), "application/json");
  });
  server.start();
  RemoteEncoder enc(server.url(), fast_options());
  CHECK_THROWS_AS(encode_batch(enc, {"text"}), BackendError);
}

TEST_CASE("remote encoder rejects a mid-session dimension change") {
  TestServer server;
  std::atomic<int> calls{0};
  server.post("/v1/embed", [&calls](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    int dim = calls.fetch_add(1) == 0 ? 4 : 3;
    nlohmann::json out;
    out["dim"] = dim;
    out["vectors"] = nlohmann::json::array();
    for (std::size_t i = 0; i < body["texts"].size(); ++i) {
      nlohmann::json v = nlohmann::json::array();
      for (int d = 0; d < dim; ++d) v.push_back(0.5);
      out["vectors"].push_back(v);
    }
    res.set_content(out.dump(), "application/json");
  });
  server.start();
  RemoteOptions opts = fast_options();
  opts.batch_size = 1;
  opts.max_in_flight = 1;
  RemoteEncoder enc(server.url(), opts);
  CHECK_THROWS_WITH(encode_batch(enc, {"first", "second"}),
                    Catch::Matchers::ContainsSubstring("dimension"));
}

TEST_CASE("remote encoder surfaces HTTP failures and bad payloads") {
  TestServer server;
  server.post("/v1/embed", [](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
  });
  server.start();
  RemoteEncoder enc(server.url(), fast_options());
  CHECK_THROWS_AS(encode_batch(enc, {"text"}), BackendError);

  RemoteEncoder unreachable("http://127.0.0.1:9", fast_options());
  CHECK_THROWS_AS(encode_batch(unreachable, {"text"}), BackendError);

  CHECK_THROWS_AS(RemoteEncoder("ftp://example", fast_options()), ConfigError);
}

TEST_CASE("remote encoder rejects non-finite payload values") {
  TestServer server;
  server.post("/v1/embed", [](const httplib::Request&, httplib::Response& res) {
    // finite as a double, infinity once narrowed to float32
    res.set_content(R"({"dim":2,"vectors":[[1e39,0.0]]})", "application/json");
  });
  server.start();
  RemoteEncoder enc(server.url(), fast_options());
  CHECK_THROWS_WITH(encode_batch(enc, {"text"}),
                    Catch::Matchers::ContainsSubstring("non-finite"));
}

TEST_CASE("remote decoder returns the text field") {
  TestServer server;
  server.post("/v1/decode", [](const httplib::Request& req, httplib::Response& res) {
    // protocol check happens here; a 400 fails the client-side assertion
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (!body.is_object() || !body.contains("vector") ||
        !body.contains("prompt_template") || !body.contains("max_tokens")) {
      res.status = 400;
      return;
    }
    res.set_content(R"({"text":"hello"})", "application/json");
  });
  server.start();
  RemoteDecoder dec(server.url(), 3, "Decode [X] now.", 64, fast_options());
  CHECK(decode(dec, EmbeddingVector({1.0f, 2.0f, 3.0f})) == "hello");
}

TEST_CASE("remote decoder treats empty text as an error") {
  TestServer server;
  server.post("/v1/decode", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"text":""})", "application/json");
  });
  server.start();
  RemoteDecoder dec(server.url(), 2, "Decode [X].", 64, fast_options());
  CHECK_THROWS_AS(decode(dec, EmbeddingVector({1.0f, 2.0f})), BackendError);
}

TEST_CASE("remote decoder retries transient failures with backoff") {
  TestServer server;
  std::atomic<int> calls{0};
  server.post("/v1/decode", [&calls](const httplib::Request&, httplib::Response& res) {
    if (calls.fetch_add(1) == 0) {
      res.status = 502;
      return;
    }
    res.set_content(R"({"text":"recovered"})", "application/json");
  });
  server.start();
  RemoteDecoder dec(server.url(), 2, "Decode [X].", 64, fast_options());
  CHECK(decode(dec, EmbeddingVector({0.5f, 0.5f})) == "recovered");
  CHECK(calls.load() == 2);
}

TEST_CASE("remote decoder does not retry non-transient failures") {
  TestServer server;
  std::atomic<int> calls{0};
  server.post("/v1/decode", [&calls](const httplib::Request&, httplib::Response& res) {
    calls.fetch_add(1);
    res.status = 404;
  });
  server.start();
  RemoteDecoder dec(server.url(), 2, "Decode [X].", 64, fast_options());
  CHECK_THROWS_AS(decode(dec, EmbeddingVector({0.5f, 0.5f})), BackendError);
  CHECK(calls.load() == 1);
}

TEST_CASE("remote decoder gives up after its retry budget") {
  TestServer server;
  std::atomic<int> calls{0};
  server.post("/v1/decode", [&calls](const httplib::Request&, httplib::Response& res) {
    calls.fetch_add(1);
    res.status = 500;
  });
  server.start();
  RemoteOptions opts = fast_options();
  opts.retries = 2;
  RemoteDecoder dec(server.url(), 2, "Decode [X].", 64, opts);
  CHECK_THROWS_WITH(decode(dec, EmbeddingVector({0.5f, 0.5f})),
                    Catch::Matchers::ContainsSubstring("3 attempts"));
  CHECK(calls.load() == 3);
}

TEST_CASE("remote decoder validates its construction") {
  CHECK_THROWS_AS(RemoteDecoder("http://127.0.0.1:9", 2, "no placeholder", 64),
                  ConfigError);
  CHECK_THROWS_AS(RemoteDecoder("http://127.0.0.1:9", 2, "[X] twice [X]", 64),
                  ConfigError);
  CHECK_THROWS_AS(RemoteDecoder("gopher://x", 2, "Decode [X].", 64), ConfigError);
}
