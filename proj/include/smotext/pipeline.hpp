#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "smotext/bridge.hpp"
#include "smotext/corpus.hpp"
#include "smotext/decode.hpp"
#include "smotext/embedding.hpp"
#include "smotext/error.hpp"
#include "smotext/evaluate.hpp"
#include "smotext/latent.hpp"
#include "smotext/remote.hpp"
#include "smotext/store.hpp"
#include "smotext/version.hpp"

namespace smotext {

/// Flat run configuration. One JSON file, every key overridable by a
/// same-named CLI flag. No implicit entropy: commands that draw random
/// numbers require an explicit seed.
struct PipelineConfig {
  std::string corpus;                 // input corpus path
  std::string format = "jsonl";       // jsonl | csv
  bool clean = false;                 // newsgroup cleaning pass
  std::uint64_t subsample_total = 0;  // 0 = keep all training examples
  double split_fraction = 0.8;        // train share of the stratified split
  std::string encoder = "mock";       // "mock" or http URL
  std::uint64_t mock_dim = 256;
  std::string projector;              // SMPW path; empty = identity
  std::string plan_target = "budget"; // budget | balance | per_class
  std::uint64_t budget = 0;
  std::map<std::string, std::uint64_t> per_class;
  std::uint64_t k_neighbors = 5;
  std::string lambda_policy = "uniform";  // uniform | fixed
  double lambda_value = 0.5;
  std::string metric = "cosine";      // cosine | euclidean
  bool renormalize = false;
  std::string decoder = "none";       // "mock", http URL, or "none"
  std::string decode_mode = "vector_only";  // text | vector_only
  std::string prompt_template = "Paraphrase the content of [X].";
  std::uint64_t max_tokens = 256;
  double timeout_seconds = 30.0;
  std::string head = "softmax";       // softmax | centroid
  double lr = 0.5;
  std::uint64_t iters = 500;
  double l2 = 1e-4;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::uint64_t threads = 1;
  std::string store;                  // inspect input
};

namespace detail {

inline std::uint64_t json_u64(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw ConfigError("config key \"" + key + "\" must be a non-negative integer");
  return v.get<std::uint64_t>();
}

inline double json_double(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key \"" + key + "\" must be a number");
  return v.get<double>();
}

inline std::string json_string(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config key \"" + key + "\" must be a string");
  return v.get<std::string>();
}

inline bool json_bool(const nlohmann::json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("config key \"" + key + "\" must be a boolean");
  return v.get<bool>();
}

inline bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("flag \"" + key + "\" expects true/false, got \"" + s + "\"");
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(s, &used);
    if (used != s.size() || s[0] == '-') throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("flag \"" + key + "\" expects a non-negative integer, got \"" +
                      s + "\"");
  }
}

inline double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("flag \"" + key + "\" expects a number, got \"" + s + "\"");
  }
}

// "A=3,B=2" -> {A:3, B:2}
inline std::map<std::string, std::uint64_t> parse_quota_list(const std::string& s,
                                                             const std::string& key) {
  std::map<std::string, std::uint64_t> out;
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t comma = s.find(',', start);
    std::string item = s.substr(start, comma == std::string::npos ? std::string::npos
                                                                  : comma - start);
    std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("flag \"" + key + "\" expects label=count pairs, got \"" + item +
                        "\"");
    out[item.substr(0, eq)] = parse_u64(item.substr(eq + 1), key);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

/// Apply one key=value override (CLI flag surface). Key names match the
/// config file keys exactly.
inline void apply_override(PipelineConfig& cfg, const std::string& key,
                           const std::string& value) {
  using namespace detail;
  if (key == "corpus") cfg.corpus = value;
  else if (key == "format") cfg.format = value;
  else if (key == "clean") cfg.clean = parse_bool(value, key);
  else if (key == "subsample_total") cfg.subsample_total = parse_u64(value, key);
  else if (key == "split_fraction") cfg.split_fraction = parse_double(value, key);
  else if (key == "encoder") cfg.encoder = value;
  else if (key == "mock_dim") cfg.mock_dim = parse_u64(value, key);
  else if (key == "projector") cfg.projector = value;
  else if (key == "plan_target") cfg.plan_target = value;
  else if (key == "budget") cfg.budget = parse_u64(value, key);
  else if (key == "per_class") cfg.per_class = parse_quota_list(value, key);
  else if (key == "k_neighbors") cfg.k_neighbors = parse_u64(value, key);
  else if (key == "lambda_policy") cfg.lambda_policy = value;
  else if (key == "lambda_value") cfg.lambda_value = parse_double(value, key);
  else if (key == "metric") cfg.metric = value;
  else if (key == "renormalize") cfg.renormalize = parse_bool(value, key);
  else if (key == "decoder") cfg.decoder = value;
  else if (key == "decode_mode") cfg.decode_mode = value;
  else if (key == "prompt_template") cfg.prompt_template = value;
  else if (key == "max_tokens") cfg.max_tokens = parse_u64(value, key);
  else if (key == "timeout_seconds") cfg.timeout_seconds = parse_double(value, key);
  else if (key == "head") cfg.head = value;
  else if (key == "lr") cfg.lr = parse_double(value, key);
  else if (key == "iters") cfg.iters = parse_u64(value, key);
  else if (key == "l2") cfg.l2 = parse_double(value, key);
  else if (key == "seed") cfg.seed = parse_u64(value, key);
  else if (key == "out") cfg.out = value;
  else if (key == "threads") cfg.threads = parse_u64(value, key);
  else if (key == "store") cfg.store = value;
  else throw ConfigError("unknown config key \"" + key + "\"");
}

/// Load a config file. Unknown keys are errors so typos cannot silently
/// fall back to defaults.
inline PipelineConfig load_config(const std::string& path) {
  std::string data = detail::read_file(path);
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(data);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  if (!obj.is_object()) throw ConfigError(path + ": config must be a JSON object");
  PipelineConfig cfg;
  using namespace detail;
  for (const auto& [key, v] : obj.items()) {
    if (key == "corpus") cfg.corpus = json_string(v, key);
    else if (key == "format") cfg.format = json_string(v, key);
    else if (key == "clean") cfg.clean = json_bool(v, key);
    else if (key == "subsample_total") cfg.subsample_total = json_u64(v, key);
    else if (key == "split_fraction") cfg.split_fraction = json_double(v, key);
    else if (key == "encoder") cfg.encoder = json_string(v, key);
    else if (key == "mock_dim") cfg.mock_dim = json_u64(v, key);
    else if (key == "projector") cfg.projector = json_string(v, key);
    else if (key == "plan_target") cfg.plan_target = json_string(v, key);
    else if (key == "budget") cfg.budget = json_u64(v, key);
    else if (key == "per_class") {
      if (!v.is_object()) throw ConfigError("config key \"per_class\" must be an object");
      for (const auto& [lab, n] : v.items()) cfg.per_class[lab] = json_u64(n, key);
    } else if (key == "k_neighbors") cfg.k_neighbors = json_u64(v, key);
    else if (key == "lambda_policy") cfg.lambda_policy = json_string(v, key);
    else if (key == "lambda_value") cfg.lambda_value = json_double(v, key);
    else if (key == "metric") cfg.metric = json_string(v, key);
    else if (key == "renormalize") cfg.renormalize = json_bool(v, key);
    else if (key == "decoder") cfg.decoder = json_string(v, key);
    else if (key == "decode_mode") cfg.decode_mode = json_string(v, key);
    else if (key == "prompt_template") cfg.prompt_template = json_string(v, key);
    else if (key == "max_tokens") cfg.max_tokens = json_u64(v, key);
    else if (key == "timeout_seconds") cfg.timeout_seconds = json_double(v, key);
    else if (key == "head") cfg.head = json_string(v, key);
    else if (key == "lr") cfg.lr = json_double(v, key);
    else if (key == "iters") cfg.iters = json_u64(v, key);
    else if (key == "l2") cfg.l2 = json_double(v, key);
    else if (key == "seed") cfg.seed = json_u64(v, key);
    else if (key == "out") cfg.out = json_string(v, key);
    else if (key == "threads") cfg.threads = json_u64(v, key);
    else if (key == "store") cfg.store = json_string(v, key);
    else throw ConfigError(path + ": unknown config key \"" + key + "\"");
  }
  return cfg;
}

/// Effective-config echo for the run manifest.
inline nlohmann::ordered_json config_to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["corpus"] = cfg.corpus;
  j["format"] = cfg.format;
  j["clean"] = cfg.clean;
  j["subsample_total"] = cfg.subsample_total;
  j["split_fraction"] = cfg.split_fraction;
  j["encoder"] = cfg.encoder;
  j["mock_dim"] = cfg.mock_dim;
  j["projector"] = cfg.projector;
  j["plan_target"] = cfg.plan_target;
  j["budget"] = cfg.budget;
  j["per_class"] = cfg.per_class;
  j["k_neighbors"] = cfg.k_neighbors;
  j["lambda_policy"] = cfg.lambda_policy;
  j["lambda_value"] = cfg.lambda_value;
  j["metric"] = cfg.metric;
  j["renormalize"] = cfg.renormalize;
  j["decoder"] = cfg.decoder;
  j["decode_mode"] = cfg.decode_mode;
  j["prompt_template"] = cfg.prompt_template;
  j["max_tokens"] = cfg.max_tokens;
  j["timeout_seconds"] = cfg.timeout_seconds;
  j["head"] = cfg.head;
  j["lr"] = cfg.lr;
  j["iters"] = cfg.iters;
  j["l2"] = cfg.l2;
  if (cfg.seed.has_value()) j["seed"] = *cfg.seed;
  j["out"] = cfg.out;
  j["threads"] = cfg.threads;
  if (!cfg.store.empty()) j["store"] = cfg.store;
  return j;
}

namespace detail {

// All validation happens before any filesystem side effect: a config error
// must not leave partial output directories behind.
inline void validate_common(const PipelineConfig& cfg, bool needs_seed) {
  if (cfg.corpus.empty()) throw ConfigError("missing required config key \"corpus\"");
  if (cfg.format != "jsonl" && cfg.format != "csv")
    throw ConfigError("config key \"format\" must be jsonl or csv");
  if (cfg.out.empty()) throw ConfigError("missing required config key \"out\"");
  if (needs_seed && !cfg.seed.has_value())
    throw ConfigError("missing required config key \"seed\" (no implicit entropy)");
  if (cfg.encoder != "mock") check_http_url(cfg.encoder);
  if (cfg.encoder == "mock" && cfg.mock_dim < 8)
    throw ConfigError("config key \"mock_dim\" must be >= 8");
  if (cfg.threads == 0) throw ConfigError("config key \"threads\" must be >= 1");
}

inline void validate_plan_keys(const PipelineConfig& cfg) {
  if (cfg.plan_target != "budget" && cfg.plan_target != "balance" &&
      cfg.plan_target != "per_class")
    throw ConfigError("config key \"plan_target\" must be budget, balance, or per_class");
  if (cfg.plan_target == "budget" && cfg.budget == 0)
    throw ConfigError("plan_target \"budget\" requires a positive \"budget\"");
  if (cfg.plan_target == "per_class" && cfg.per_class.empty())
    throw ConfigError("plan_target \"per_class\" requires non-empty \"per_class\" quotas");
  if (cfg.k_neighbors == 0) throw ConfigError("config key \"k_neighbors\" must be >= 1");
  if (cfg.lambda_policy != "uniform" && cfg.lambda_policy != "fixed")
    throw ConfigError("config key \"lambda_policy\" must be uniform or fixed");
  if (cfg.lambda_policy == "fixed" && !(cfg.lambda_value >= 0.0 && cfg.lambda_value <= 1.0))
    throw ConfigError("config key \"lambda_value\" must lie in [0,1]");
  metric_from_string(cfg.metric);
}

inline void validate_decoder_keys(const PipelineConfig& cfg) {
  if (cfg.decode_mode != "text" && cfg.decode_mode != "vector_only")
    throw ConfigError("config key \"decode_mode\" must be text or vector_only");
  if (cfg.decode_mode == "text" && cfg.decoder == "none")
    throw ConfigError("decode_mode \"text\" requires a decoder backend");
  if (cfg.decoder != "none" && cfg.decoder != "mock") check_http_url(cfg.decoder);
  if (cfg.decoder != "none") validate_prompt_template(cfg.prompt_template);
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("short write to file: " + path);
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError("[" + std::string(name) + "] " + e.what());
  } catch (const BackendError& e) {
    throw BackendError("[" + std::string(name) + "] " + e.what());
  } catch (const DataError& e) {
    throw DataError("[" + std::string(name) + "] " + e.what());
  }
}

inline std::unique_ptr<Encoder> make_encoder(const PipelineConfig& cfg) {
  if (cfg.encoder == "mock")
    return std::make_unique<MockEncoder>(cfg.mock_dim,
                                         static_cast<unsigned>(cfg.threads));
  RemoteOptions opts;
  opts.timeout_seconds = cfg.timeout_seconds;
  opts.max_in_flight = static_cast<unsigned>(cfg.threads);
  return std::make_unique<RemoteEncoder>(cfg.encoder, opts);
}

inline PlanTarget plan_target_from(const PipelineConfig& cfg) {
  if (cfg.plan_target == "budget") return PlanTarget::budget(cfg.budget);
  if (cfg.plan_target == "balance") return PlanTarget::balance();
  std::vector<std::pair<std::string, std::uint64_t>> quotas(cfg.per_class.begin(),
                                                            cfg.per_class.end());
  return PlanTarget::explicit_quotas(std::move(quotas));
}

inline LambdaPolicy lambda_policy_from(const PipelineConfig& cfg) {
  return cfg.lambda_policy == "fixed" ? LambdaPolicy::fixed(cfg.lambda_value)
                                      : LambdaPolicy::uniform();
}

/// Encode a corpus into a store whose label table is the corpus label_set.
/// One embedding per example id: the encoder is called exactly once per
/// example, which is what makes possibly-nondeterministic remote backends
/// safe to use.
inline VectorStore encode_corpus(const Corpus& corpus, Encoder& encoder) {
  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const auto& ex : corpus.examples()) texts.push_back(ex.text);
  std::vector<EmbeddingVector> vectors = encode_batch(encoder, texts);
  VectorStore store(static_cast<std::uint32_t>(encoder.dim()), corpus.label_set());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    store.add(corpus.examples()[i].id, corpus.examples()[i].label,
              std::move(vectors[i]));
  return store;
}

/// Subset of a session store by corpus membership, sharing the label table.
inline VectorStore select_store(const VectorStore& session, const Corpus& members) {
  VectorStore out(session.dim(), session.labels());
  for (const auto& ex : members.examples()) {
    const auto& entry = session.by_id(ex.id);
    out.add(entry.id, session.label_name(entry.label_id), entry.vec);
  }
  return out;
}

inline void decode_records(std::vector<SyntheticRecord>& records,
                           const Projector& projector, Decoder& decoder,
                           unsigned threads) {
  parallel_for(records.size(), threads, [&](std::size_t i) {
    try {
      EmbeddingVector h = projector.project(records[i].vec);
      records[i].text = decode(decoder, h);
    } catch (const BackendError& e) {
      // Partial-failure tolerance: keep the vector, note the failure.
      // Structural errors (dimension mismatch) propagate and abort.
      records[i].decode_error = e.what();
    }
  });
}

inline VectorStore records_to_store(const std::vector<SyntheticRecord>& records,
                                    std::uint32_t dim,
                                    const std::vector<std::string>& labels) {
  VectorStore store(dim, labels);
  for (const auto& rec : records) store.add(rec.id, rec.label, rec.vec);
  return store;
}

inline std::string provenance_jsonl(const std::vector<SyntheticRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    nlohmann::ordered_json j;
    j["id"] = rec.id;
    j["parent_a"] = rec.parent_a;
    j["parent_b"] = rec.parent_b;
    j["lambda"] = rec.lambda;
    j["label"] = rec.label;
    if (rec.decode_error.has_value()) j["decode_error"] = *rec.decode_error;
    out += j.dump();
    out += "\n";
  }
  return out;
}

inline std::string texts_jsonl(const std::vector<SyntheticRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    if (!rec.text.has_value()) continue;
    nlohmann::ordered_json j;
    j["id"] = rec.id;
    j["text"] = *rec.text;
    j["label"] = rec.label;
    out += j.dump();
    out += "\n";
  }
  return out;
}

inline void write_manifest(const PipelineConfig& cfg, const std::string& command,
                           nlohmann::ordered_json extra = {}) {
  nlohmann::ordered_json j;
  j["tool"] = "smotext";
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = config_to_json(cfg);
  for (auto& [k, v] : extra.items()) j[k] = v;
  write_text_file((std::filesystem::path(cfg.out) / "run_manifest.json").string(),
                  j.dump(2) + "\n");
}

}  // namespace detail

struct AugmentOutcome {
  std::vector<std::pair<std::string, std::uint64_t>> per_class;
  std::size_t records = 0;
  std::size_t dropped_empty = 0;
  std::size_t decode_failures = 0;
};

/// augment: embed -> plan -> interpolate -> project -> (decode) and write
/// the synthetic store, the provenance sidecar, and texts when decoding.
inline AugmentOutcome cmd_augment(const PipelineConfig& cfg,
                                  std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  detail::stage("config", [&] {
    detail::validate_common(cfg, /*needs_seed=*/true);
    detail::validate_plan_keys(cfg);
    detail::validate_decoder_keys(cfg);
    return 0;
  });

  CleanStats clean_stats;
  Corpus corpus = detail::stage("load", [&] {
    Corpus c = load_corpus(cfg.corpus,
                           cfg.format == "csv" ? CorpusFormat::csv : CorpusFormat::jsonl);
    if (cfg.clean) c = clean_corpus(c, &clean_stats);
    if (c.empty()) throw DataError("corpus is empty after loading/cleaning");
    return c;
  });
  if (cfg.subsample_total > 0)
    corpus = detail::stage(
        "subsample", [&] { return subsample_per_class(corpus, cfg.subsample_total, *cfg.seed); });

  auto encoder = detail::make_encoder(cfg);
  VectorStore store =
      detail::stage("encode", [&] { return detail::encode_corpus(corpus, *encoder); });

  AugmentationPlan plan = detail::stage("plan", [&] {
    std::vector<std::pair<std::string, std::size_t>> counts = corpus.class_counts();
    AugmentationPlan p =
        build_plan(counts, detail::plan_target_from(cfg),
                   static_cast<std::size_t>(cfg.k_neighbors),
                   detail::lambda_policy_from(cfg), *cfg.seed);
    p.metric = metric_from_string(cfg.metric);
    p.renormalize = cfg.renormalize;
    return p;
  });

  std::vector<SyntheticRecord> records = detail::stage("generate", [&] {
    return generate_synthetic_vectors(store, plan, static_cast<unsigned>(cfg.threads));
  });

  Projector projector = detail::stage("project", [&] {
    return cfg.projector.empty() ? Projector::identity(store.dim())
                                 : load_projector(cfg.projector);
  });

  std::size_t decode_failures = 0;
  if (cfg.decoder != "none") {
    detail::stage("decode", [&] {
      std::unique_ptr<Decoder> dec;
      if (cfg.decoder == "mock") {
        dec = std::make_unique<MockDecoder>(
            store, [&corpus](const std::string& id) { return corpus.by_id(id).text; });
      } else {
        RemoteOptions opts;
        opts.timeout_seconds = cfg.timeout_seconds;
        dec = std::make_unique<RemoteDecoder>(cfg.decoder, projector.out_dim(),
                                              cfg.prompt_template,
                                              static_cast<int>(cfg.max_tokens), opts);
      }
      detail::decode_records(records, projector, *dec,
                             static_cast<unsigned>(cfg.threads));
      return 0;
    });
    for (const auto& rec : records)
      if (rec.decode_error.has_value()) ++decode_failures;
  }

  detail::stage("write", [&] {
    fs::create_directories(fs::path(cfg.out) / "vectors");
    fs::create_directories(fs::path(cfg.out) / "synthetic");
    write_store(store, (fs::path(cfg.out) / "vectors" / "corpus.smtx").string());
    VectorStore synthetic =
        detail::records_to_store(records, store.dim(), store.labels());
    write_store(synthetic, (fs::path(cfg.out) / "synthetic" / "synthetic.smtx").string());
    detail::write_text_file((fs::path(cfg.out) / "synthetic" / "provenance.jsonl").string(),
                            detail::provenance_jsonl(records));
    if (cfg.decoder != "none")
      detail::write_text_file((fs::path(cfg.out) / "synthetic" / "texts.jsonl").string(),
                              detail::texts_jsonl(records));
    nlohmann::ordered_json extra;
    extra["dropped_empty_after_cleaning"] = clean_stats.dropped_empty;
    extra["decode_failures"] = decode_failures;
    detail::write_manifest(cfg, "augment", extra);
    return 0;
  });

  AugmentOutcome outcome;
  outcome.records = records.size();
  outcome.dropped_empty = clean_stats.dropped_empty;
  outcome.decode_failures = decode_failures;
  for (const auto& [label, quota] : plan.per_class)
    outcome.per_class.emplace_back(label, quota);

  log << "augment: " << outcome.records << " synthetic records\n";
  for (const auto& [label, n] : outcome.per_class)
    log << "  class " << label << ": " << n << "\n";
  if (cfg.clean)
    log << "  dropped empty after cleaning: " << outcome.dropped_empty << "\n";
  if (cfg.decoder != "none")
    log << "  decode failures: " << outcome.decode_failures << "\n";
  return outcome;
}

/// eval: stratified split, optional subsample of the train side, one
/// encoding pass over the whole corpus, synthetic generation from the train
/// store, then the three-condition experiment on a shared test set.
inline std::vector<EvaluationReport> cmd_eval(const PipelineConfig& cfg,
                                              std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  detail::stage("config", [&] {
    detail::validate_common(cfg, /*needs_seed=*/true);
    detail::validate_plan_keys(cfg);
    detail::validate_decoder_keys(cfg);
    if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0))
      throw ConfigError("config key \"split_fraction\" must lie in (0,1)");
    if (cfg.head != "softmax" && cfg.head != "centroid")
      throw ConfigError("config key \"head\" must be softmax or centroid");
    return 0;
  });

  CleanStats clean_stats;
  Corpus corpus = detail::stage("load", [&] {
    Corpus c = load_corpus(cfg.corpus,
                           cfg.format == "csv" ? CorpusFormat::csv : CorpusFormat::jsonl);
    if (cfg.clean) c = clean_corpus(c, &clean_stats);
    if (c.empty()) throw DataError("corpus is empty after loading/cleaning");
    return c;
  });

  auto [train_corpus, test_corpus] = detail::stage(
      "split", [&] { return split_corpus(corpus, cfg.split_fraction, *cfg.seed); });
  if (cfg.subsample_total > 0)
    train_corpus = detail::stage("subsample", [&] {
      return subsample_per_class(train_corpus, cfg.subsample_total, *cfg.seed);
    });

  // Single encoding pass over every example this run touches, then subset
  // by membership: one embedding per id.
  auto encoder = detail::make_encoder(cfg);
  VectorStore session = detail::stage("encode", [&] {
    Corpus touched;
    for (const auto& ex : train_corpus.examples()) touched.add(ex);
    for (const auto& ex : test_corpus.examples()) touched.add(ex);
    return detail::encode_corpus(touched, *encoder);
  });
  VectorStore train_store = detail::select_store(session, train_corpus);
  VectorStore test_store = detail::select_store(session, test_corpus);

  AugmentationPlan plan = detail::stage("plan", [&] {
    AugmentationPlan p =
        build_plan(train_corpus.class_counts(), detail::plan_target_from(cfg),
                   static_cast<std::size_t>(cfg.k_neighbors),
                   detail::lambda_policy_from(cfg), *cfg.seed);
    p.metric = metric_from_string(cfg.metric);
    p.renormalize = cfg.renormalize;
    return p;
  });
  std::vector<SyntheticRecord> records = detail::stage("generate", [&] {
    return generate_synthetic_vectors(train_store, plan,
                                      static_cast<unsigned>(cfg.threads));
  });

  Projector projector = detail::stage("project", [&] {
    return cfg.projector.empty() ? Projector::identity(train_store.dim())
                                 : load_projector(cfg.projector);
  });
  if (cfg.decode_mode == "text") {
    detail::stage("decode", [&] {
      std::unique_ptr<Decoder> dec;
      if (cfg.decoder == "mock") {
        dec = std::make_unique<MockDecoder>(train_store, [&train_corpus](const std::string& id) {
          return train_corpus.by_id(id).text;
        });
      } else {
        RemoteOptions opts;
        opts.timeout_seconds = cfg.timeout_seconds;
        dec = std::make_unique<RemoteDecoder>(cfg.decoder, projector.out_dim(),
                                              cfg.prompt_template,
                                              static_cast<int>(cfg.max_tokens), opts);
      }
      detail::decode_records(records, projector, *dec,
                             static_cast<unsigned>(cfg.threads));
      return 0;
    });
  }

  ExperimentInputs inputs;
  inputs.train_store = &train_store;
  inputs.test_store = &test_store;
  inputs.synthetic = &records;
  inputs.encoder = encoder.get();
  inputs.mode = cfg.decode_mode == "text" ? SyntheticMode::text : SyntheticMode::vector_only;
  inputs.head = cfg.head == "centroid" ? HeadKind::nearest_centroid : HeadKind::softmax;
  inputs.hyper = SoftmaxHyper{cfg.l2, cfg.lr, cfg.iters};
  inputs.label_set = corpus.label_set();
  inputs.seed = *cfg.seed;
  inputs.threads = static_cast<unsigned>(cfg.threads);
  std::vector<EvaluationReport> reports =
      detail::stage("evaluate", [&] { return run_experiment(inputs); });

  detail::stage("write", [&] {
    fs::create_directories(fs::path(cfg.out) / "vectors");
    fs::create_directories(fs::path(cfg.out) / "synthetic");
    fs::create_directories(fs::path(cfg.out) / "reports");
    write_store(train_store, (fs::path(cfg.out) / "vectors" / "train.smtx").string());
    write_store(test_store, (fs::path(cfg.out) / "vectors" / "test.smtx").string());
    VectorStore synthetic =
        detail::records_to_store(records, train_store.dim(), train_store.labels());
    write_store(synthetic, (fs::path(cfg.out) / "synthetic" / "synthetic.smtx").string());
    detail::write_text_file((fs::path(cfg.out) / "synthetic" / "provenance.jsonl").string(),
                            detail::provenance_jsonl(records));
    for (const auto& rep : reports)
      detail::write_text_file(
          (fs::path(cfg.out) / "reports" / (rep.condition + ".json")).string(),
          report_to_json(rep).dump(2) + "\n");
    nlohmann::ordered_json extra;
    extra["dropped_empty_after_cleaning"] = clean_stats.dropped_empty;
    nlohmann::ordered_json ref = nlohmann::ordered_json::array();
    for (const auto& r : kFullScaleReference) {
      nlohmann::ordered_json row;
      row["condition"] = r.condition;
      row["accuracy"] = r.accuracy;
      row["macro_f1"] = r.macro_f1;
      row["weighted_f1"] = r.weighted_f1;
      ref.push_back(row);
    }
    extra["reference_full_scale"] = ref;
    detail::write_manifest(cfg, "eval", extra);
    return 0;
  });

  log << format_report_table(reports);
  if (reports.size() < 3)
    log << "note: synthetic set is empty; real_plus_synthetic and synthetic_only "
           "conditions were skipped\n";
  return reports;
}

/// inspect: human-readable store summary.
inline void cmd_inspect(const std::string& store_path, std::ostream& out = std::cout) {
  VectorStore store = read_store(store_path);
  out << "dim=" << store.dim() << " entries=" << store.size() << "\n";
  auto by_label = store.indices_by_label();
  for (std::size_t l = 0; l < store.labels().size(); ++l) {
    if (by_label[l].empty()) continue;
    out << "class " << store.labels()[l] << ": " << by_label[l].size() << "\n";
  }
  if (!store.empty()) {
    double min_n = 0.0, max_n = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < store.size(); ++i) {
      double n = norm(store.entries()[i].vec);
      if (i == 0) {
        min_n = max_n = n;
      } else {
        min_n = std::min(min_n, n);
        max_n = std::max(max_n, n);
      }
      sum += n;
    }
    out << "norm min=" << min_n << " mean=" << sum / static_cast<double>(store.size())
        << " max=" << max_n << "\n";
  }
}

/// encode: corpus -> vector store on disk.
inline void cmd_encode(const PipelineConfig& cfg, std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  detail::stage("config", [&] {
    detail::validate_common(cfg, /*needs_seed=*/false);
    return 0;
  });
  CleanStats clean_stats;
  Corpus corpus = detail::stage("load", [&] {
    Corpus c = load_corpus(cfg.corpus,
                           cfg.format == "csv" ? CorpusFormat::csv : CorpusFormat::jsonl);
    if (cfg.clean) c = clean_corpus(c, &clean_stats);
    if (c.empty()) throw DataError("corpus is empty after loading/cleaning");
    return c;
  });
  auto encoder = detail::make_encoder(cfg);
  VectorStore store =
      detail::stage("encode", [&] { return detail::encode_corpus(corpus, *encoder); });
  detail::stage("write", [&] {
    fs::create_directories(fs::path(cfg.out) / "vectors");
    write_store(store, (fs::path(cfg.out) / "vectors" / "corpus.smtx").string());
    nlohmann::ordered_json extra;
    extra["dropped_empty_after_cleaning"] = clean_stats.dropped_empty;
    detail::write_manifest(cfg, "encode", extra);
    return 0;
  });
  log << "encode: " << store.size() << " vectors, dim=" << store.dim() << "\n";
}

/// clean: corpus -> cleaned JSONL corpus.
inline CleanStats cmd_clean(const PipelineConfig& cfg, std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  detail::stage("config", [&] {
    detail::validate_common(cfg, /*needs_seed=*/false);
    return 0;
  });
  Corpus corpus = detail::stage("load", [&] {
    return load_corpus(cfg.corpus,
                       cfg.format == "csv" ? CorpusFormat::csv : CorpusFormat::jsonl);
  });
  CleanStats stats;
  Corpus cleaned = clean_corpus(corpus, &stats);
  detail::stage("write", [&] {
    fs::create_directories(cfg.out);
    write_corpus_jsonl(cleaned, (fs::path(cfg.out) / "cleaned.jsonl").string());
    nlohmann::ordered_json extra;
    extra["dropped_empty_after_cleaning"] = stats.dropped_empty;
    detail::write_manifest(cfg, "clean", extra);
    return 0;
  });
  log << "clean: kept " << cleaned.size() << " examples, dropped "
      << stats.dropped_empty << " empty\n";
  return stats;
}

}  // namespace smotext
