#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "smotext/decode.hpp"
#include "smotext/embedding.hpp"
#include "smotext/error.hpp"
#include "smotext/parallel.hpp"

namespace smotext {

struct RemoteOptions {
  double timeout_seconds = 30.0;
  std::size_t batch_size = 32;   // texts per embed request
  unsigned max_in_flight = 4;    // bound on concurrent requests
  unsigned retries = 2;          // decode retries on transient failures
  unsigned backoff_ms = 100;     // first retry delay, doubled per attempt
};

namespace detail {

inline void check_http_url(const std::string& url) {
  if (url.rfind("http://", 0) != 0)
    throw ConfigError("remote backend URL must start with http:// (got \"" + url + "\")");
}

inline httplib::Client make_client(const std::string& base_url, double timeout_seconds) {
  httplib::Client client(base_url);
  auto usec = std::chrono::microseconds(
      static_cast<std::int64_t>(timeout_seconds * 1e6));
  client.set_connection_timeout(usec);
  client.set_read_timeout(usec);
  client.set_write_timeout(usec);
  return client;
}

}  // namespace detail

/// HTTP encoder backend. POST /v1/embed with {"texts": [...]}, expecting
/// {"dim": int, "vectors": [[...], ...]}. Requests are batched; up to
/// max_in_flight batches run concurrently and results are reassembled in
/// input order. The first response pins the session dimension.
class RemoteEncoder final : public Encoder {
 public:
  explicit RemoteEncoder(std::string base_url, RemoteOptions opts = {})
      : base_url_(std::move(base_url)), opts_(opts) {
    detail::check_http_url(base_url_);
    if (opts_.batch_size == 0) throw ConfigError("remote encoder: batch_size must be > 0");
  }

  std::size_t dim() const override { return dim_; }
  std::string name() const override { return base_url_; }

  std::vector<EmbeddingVector> encode(const std::vector<std::string>& texts) override {
    std::vector<EmbeddingVector> out(texts.size());
    if (texts.empty()) return out;

    std::size_t batches = (texts.size() + opts_.batch_size - 1) / opts_.batch_size;
    // First batch alone pins the session dim, the rest go concurrently.
    encode_one_batch(texts, 0, out);
    detail::parallel_for(batches - 1, opts_.max_in_flight, [&](std::size_t b) {
      encode_one_batch(texts, b + 1, out);
    });
    return out;
  }

 private:
  void encode_one_batch(const std::vector<std::string>& texts, std::size_t batch,
                        std::vector<EmbeddingVector>& out) {
    std::size_t begin = batch * opts_.batch_size;
    std::size_t end = std::min(begin + opts_.batch_size, texts.size());
    nlohmann::json request;
    request["texts"] = nlohmann::json::array();
    for (std::size_t i = begin; i < end; ++i) request["texts"].push_back(texts[i]);

    auto client = detail::make_client(base_url_, opts_.timeout_seconds);
    httplib::Result res = client.Post("/v1/embed", request.dump(), "application/json");
    if (!res)
      throw BackendError("encoder " + base_url_ + " unreachable: " +
                         httplib::to_string(res.error()));
    if (res->status != 200)
      throw BackendError("encoder " + base_url_ + " returned HTTP " +
                         std::to_string(res->status));

    nlohmann::json body;
    try {
      body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw BackendError("encoder " + base_url_ + " returned invalid JSON: " + e.what());
    }
    if (!body.contains("dim") || !body["dim"].is_number_integer() ||
        !body.contains("vectors") || !body["vectors"].is_array())
      throw BackendError("encoder " + base_url_ +
                         " response missing \"dim\"/\"vectors\"");
    auto response_dim = body["dim"].get<std::size_t>();

    std::size_t expected = 0;
    if (!dim_.compare_exchange_strong(expected, response_dim)) {
      if (dim_ != response_dim)
        throw BackendError("encoder " + base_url_ + " changed dimension mid-session: " +
                           std::to_string(response_dim) + " vs " +
                           std::to_string(dim_.load()));
    }

    const auto& vectors = body["vectors"];
    if (vectors.size() != end - begin)
      throw BackendError("encoder " + base_url_ + " returned " +
                         std::to_string(vectors.size()) + " vectors for " +
                         std::to_string(end - begin) + " texts");
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      if (!vectors[i].is_array() || vectors[i].size() != response_dim)
        throw BackendError("encoder " + base_url_ + " vector " + std::to_string(i) +
                           " does not match response dim " +
                           std::to_string(response_dim));
      EmbeddingVector v;
      v.values.reserve(response_dim);
      for (const auto& x : vectors[i]) {
        if (!x.is_number())
          throw BackendError("encoder " + base_url_ + " returned a non-numeric entry");
        v.values.push_back(x.get<float>());
      }
      out[begin + i] = std::move(v);
    }
  }

  std::string base_url_;
  RemoteOptions opts_;
  std::atomic<std::size_t> dim_{0};
};

/// HTTP decoder backend. POST /v1/decode with the raw vector — the service
/// owns [X] token insertion. Transient failures (connection errors, 5xx)
/// are retried with exponential backoff; other failures raise immediately.
class RemoteDecoder final : public Decoder {
 public:
  RemoteDecoder(std::string base_url, std::size_t expected_dim,
                std::string prompt_template = "Paraphrase the content of [X].",
                int max_tokens = 256, RemoteOptions opts = {})
      : base_url_(std::move(base_url)), dim_(expected_dim),
        prompt_template_(std::move(prompt_template)), max_tokens_(max_tokens),
        opts_(opts) {
    detail::check_http_url(base_url_);
    validate_prompt_template(prompt_template_);
    if (max_tokens_ <= 0) throw ConfigError("remote decoder: max_tokens must be > 0");
  }

  std::size_t dim() const override { return dim_; }
  std::string name() const override { return base_url_; }

  std::string decode_raw(const EmbeddingVector& h) override {
    nlohmann::json request;
    request["vector"] = h.values;
    request["prompt_template"] = prompt_template_;
    request["max_tokens"] = max_tokens_;
    std::string payload = request.dump();

    std::string last_error;
    for (unsigned attempt = 0; attempt <= opts_.retries; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(
            std::chrono::milliseconds(opts_.backoff_ms << (attempt - 1)));
      auto client = detail::make_client(base_url_, opts_.timeout_seconds);
      httplib::Result res = client.Post("/v1/decode", payload, "application/json");
      if (!res) {
        last_error = "unreachable: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw BackendError("decoder " + base_url_ + " returned HTTP " +
                           std::to_string(res->status));
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw BackendError("decoder " + base_url_ + " returned invalid JSON: " +
                           e.what());
      }
      if (!body.contains("text") || !body["text"].is_string())
        throw BackendError("decoder " + base_url_ + " response missing \"text\"");
      return body["text"].get<std::string>();
    }
    throw BackendError("decoder " + base_url_ + " failed after " +
                       std::to_string(opts_.retries + 1) + " attempts (" +
                       last_error + ")");
  }

 private:
  std::string base_url_;
  std::size_t dim_;
  std::string prompt_template_;
  int max_tokens_;
  RemoteOptions opts_;
};

}  // namespace smotext
