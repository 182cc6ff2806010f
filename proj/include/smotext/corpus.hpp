#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "smotext/bytes.hpp"
#include "smotext/error.hpp"
#include "smotext/rng.hpp"

namespace smotext {

/// One labeled text unit.
struct TextExample {
  std::string id;
  std::string text;
  std::string label;
};

/// Ordered collection of examples with a first-appearance-ordered label set.
/// Ids are unique; iteration order is insertion order.
class Corpus {
 public:
  void add(TextExample ex) {
    if (!id_index_.emplace(ex.id, examples_.size()).second)
      throw DataError("corpus: duplicate id \"" + ex.id + "\"");
    if (label_index_.emplace(ex.label, label_set_.size()).second)
      label_set_.push_back(ex.label);
    examples_.push_back(std::move(ex));
  }

  const std::vector<TextExample>& examples() const { return examples_; }
  const std::vector<std::string>& label_set() const { return label_set_; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }

  bool contains(const std::string& id) const { return id_index_.count(id) != 0; }

  const TextExample& by_id(const std::string& id) const {
    auto it = id_index_.find(id);
    if (it == id_index_.end()) throw DataError("corpus: unknown id \"" + id + "\"");
    return examples_[it->second];
  }

  /// Per-class example counts in label_set order.
  std::vector<std::pair<std::string, std::size_t>> class_counts() const {
    std::vector<std::pair<std::string, std::size_t>> counts;
    counts.reserve(label_set_.size());
    for (const auto& lab : label_set_) counts.emplace_back(lab, 0);
    for (const auto& ex : examples_) counts[label_index_.at(ex.label)].second++;
    return counts;
  }

 private:
  std::vector<TextExample> examples_;
  std::vector<std::string> label_set_;
  std::unordered_map<std::string, std::size_t> id_index_;
  std::unordered_map<std::string, std::size_t> label_index_;
};

enum class CorpusFormat { jsonl, csv };

namespace detail {

// Minimal RFC-4180 CSV: quoted fields, "" escapes, newlines inside quotes.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& data,
                                                       const std::string& path) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < data.size(); ++i) {
    char c = data[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty())
          throw DataError(path + ": stray quote in record " +
                          std::to_string(records.size() + 1));
        quoted = true;
        any = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        if (any || !field.empty()) {
          row.push_back(std::move(field));
          field.clear();
          records.push_back(std::move(row));
          row.clear();
          any = false;
        }
        break;
      default:
        field.push_back(c);
        any = true;
        break;
    }
  }
  if (quoted)
    throw DataError(path + ": unterminated quoted field at end of file");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    records.push_back(std::move(row));
  }
  return records;
}

}  // namespace detail

/// Load a labeled corpus from JSONL ({"text","label"[,"id"]} per line) or
/// CSV (header row with columns text,label[,id]). Missing ids default to
/// the 0-based row index. Blank lines are skipped.
inline Corpus load_corpus(const std::string& path, CorpusFormat format) {
  std::string data = detail::read_file(path);
  Corpus corpus;
  if (format == CorpusFormat::jsonl) {
    std::istringstream in(data);
    std::string line;
    std::size_t line_no = 0;
    std::size_t row_index = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": malformed row at line " + std::to_string(line_no) +
                        ": " + e.what());
      }
      if (!obj.is_object())
        throw DataError(path + ": malformed row at line " + std::to_string(line_no) +
                        ": not a JSON object");
      for (const char* key : {"text", "label"})
        if (!obj.contains(key) || !obj[key].is_string())
          throw DataError(path + ": row at line " + std::to_string(line_no) +
                          " missing string field \"" + key + "\"");
      TextExample ex;
      ex.text = obj["text"].get<std::string>();
      ex.label = obj["label"].get<std::string>();
      if (obj.contains("id")) {
        if (!obj["id"].is_string())
          throw DataError(path + ": row at line " + std::to_string(line_no) +
                          ": \"id\" must be a string");
        ex.id = obj["id"].get<std::string>();
      } else {
        ex.id = std::to_string(row_index);
      }
      corpus.add(std::move(ex));
      ++row_index;
    }
    return corpus;
  }

  auto records = detail::parse_csv(data, path);
  if (records.empty()) return corpus;
  const auto& header = records.front();
  std::ptrdiff_t text_col = -1, label_col = -1, id_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "text") text_col = static_cast<std::ptrdiff_t>(i);
    else if (header[i] == "label") label_col = static_cast<std::ptrdiff_t>(i);
    else if (header[i] == "id") id_col = static_cast<std::ptrdiff_t>(i);
  }
  if (text_col < 0 || label_col < 0)
    throw DataError(path + ": CSV header must contain \"text\" and \"label\" columns");
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size())
      throw DataError(path + ": row " + std::to_string(r) + " has " +
                      std::to_string(rec.size()) + " fields, header has " +
                      std::to_string(header.size()));
    TextExample ex;
    ex.text = rec[static_cast<std::size_t>(text_col)];
    ex.label = rec[static_cast<std::size_t>(label_col)];
    ex.id = id_col >= 0 ? rec[static_cast<std::size_t>(id_col)] : std::to_string(r - 1);
    corpus.add(std::move(ex));
  }
  return corpus;
}

/// Serialize a corpus as JSONL with keys id, text, label.
inline void write_corpus_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  for (const auto& ex : corpus.examples()) {
    nlohmann::ordered_json obj;
    obj["id"] = ex.id;
    obj["text"] = ex.text;
    obj["label"] = ex.label;
    out << obj.dump() << "\n";
  }
}

namespace detail {

inline bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

// "Name: value" shape: a colon preceded by at least one character, with no
// whitespace inside the name token.
inline bool is_header_line(std::string_view line) {
  std::size_t colon = line.find(':');
  if (colon == std::string_view::npos || colon == 0) return false;
  for (std::size_t i = 0; i < colon; ++i)
    if (line[i] == ' ' || line[i] == '\t') return false;
  return true;
}

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string line(nl == std::string_view::npos ? text.substr(start)
                                                  : text.substr(start, nl - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

inline std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

/// Newsgroup-post cleaning: strip the leading header block (everything up
/// to the first blank line, when every line before it is "Name: value"
/// shaped or a whitespace-indented continuation), drop quoted lines
/// (leading '>' or '|'), cut the trailing signature (from the first line
/// equal to "--" or "-- " onward), and trim surrounding whitespace. May
/// return an empty string; callers drop and count such examples.
inline std::string clean_newsgroup_text(std::string_view raw) {
  std::vector<std::string> lines = detail::split_lines(raw);

  std::size_t body_start = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!detail::is_blank(lines[i])) continue;
    bool header_block = i > 0;
    for (std::size_t j = 0; j < i && header_block; ++j) {
      bool continuation = j > 0 && (lines[j][0] == ' ' || lines[j][0] == '\t');
      if (!continuation && !detail::is_header_line(lines[j])) header_block = false;
    }
    if (header_block) body_start = i + 1;
    break;  // only the first blank line can terminate a header block
  }

  std::string body;
  for (std::size_t i = body_start; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line == "--" || line == "-- ") break;
    if (!line.empty() && (line[0] == '>' || line[0] == '|')) continue;
    if (!body.empty()) body.push_back('\n');
    body += line;
  }
  return detail::trim(body);
}

struct CleanStats {
  std::size_t dropped_empty = 0;
};

/// Clean every example; examples that come back empty are dropped and
/// counted, not errors.
inline Corpus clean_corpus(const Corpus& corpus, CleanStats* stats = nullptr) {
  Corpus out;
  CleanStats local;
  for (const auto& ex : corpus.examples()) {
    std::string cleaned = clean_newsgroup_text(ex.text);
    if (cleaned.empty()) {
      ++local.dropped_empty;
      continue;
    }
    out.add({ex.id, std::move(cleaned), ex.label});
  }
  if (stats) *stats = local;
  return out;
}

namespace detail {

// ceil(fraction * n) with a snap to the nearest integer when the product
// sits within 1e-9 of it, so 0.07 * 100 counts as 7, not 8.
inline std::size_t ceil_count(double fraction, std::size_t n) {
  double t = fraction * static_cast<double>(n);
  double r = std::nearbyint(t);
  if (std::abs(t - r) < 1e-9) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(t));
}

inline std::vector<std::vector<std::size_t>> indices_by_class(const Corpus& corpus) {
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < corpus.label_set().size(); ++i)
    pos[corpus.label_set()[i]] = i;
  std::vector<std::vector<std::size_t>> by_class(corpus.label_set().size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    by_class[pos[corpus.examples()[i].label]].push_back(i);
  return by_class;
}

}  // namespace detail

/// Draw floor(total / num_classes) examples per class without replacement
/// (remainder distributed +1 to classes in label_set order) via a per-class
/// seeded shuffle. Output preserves the input's example order.
inline Corpus subsample_per_class(const Corpus& corpus, std::size_t total,
                                  std::uint64_t seed) {
  if (total > corpus.size())
    throw DataError("subsample: total " + std::to_string(total) +
                    " exceeds corpus size " + std::to_string(corpus.size()));
  std::size_t num_classes = corpus.label_set().size();
  if (num_classes == 0) throw DataError("subsample: corpus has no classes");
  std::size_t base = total / num_classes;
  std::size_t rem = total % num_classes;
  if (base == 0)
    throw DataError("subsample: total " + std::to_string(total) + " over " +
                    std::to_string(num_classes) +
                    " classes would give some class 0 examples");

  auto by_class = detail::indices_by_class(corpus);
  std::vector<bool> selected(corpus.size(), false);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t quota = base + (c < rem ? 1 : 0);
    auto& members = by_class[c];
    if (quota > members.size())
      throw DataError("subsample: class \"" + corpus.label_set()[c] + "\" has " +
                      std::to_string(members.size()) + " examples, quota is " +
                      std::to_string(quota));
    SplitMix64 rng = derive_stream(seed, "subsample", corpus.label_set()[c], 0);
    seeded_shuffle(members, rng);
    for (std::size_t j = 0; j < quota; ++j) selected[members[j]] = true;
  }
  Corpus out;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (selected[i]) out.add(corpus.examples()[i]);
  return out;
}

/// Stratified split: per-class seeded shuffle, the first
/// ceil(fraction * n_c) members go to the first side. Sides are disjoint
/// and their union is the input; both preserve input order.
inline std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus,
                                              double train_fraction,
                                              std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("split: train_fraction must lie in (0,1)");
  auto by_class = detail::indices_by_class(corpus);
  std::vector<bool> in_train(corpus.size(), false);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    std::size_t n_train = detail::ceil_count(train_fraction, members.size());
    if (n_train == 0 || n_train >= members.size())
      throw DataError("split: class \"" + corpus.label_set()[c] + "\" with " +
                      std::to_string(members.size()) +
                      " examples cannot appear on both sides");
    SplitMix64 rng = derive_stream(seed, "split", corpus.label_set()[c], 0);
    seeded_shuffle(members, rng);
    for (std::size_t j = 0; j < n_train; ++j) in_train[members[j]] = true;
  }
  Corpus train, test;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    (in_train[i] ? train : test).add(corpus.examples()[i]);
  return {std::move(train), std::move(test)};
}

}  // namespace smotext
