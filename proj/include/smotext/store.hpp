#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "smotext/bytes.hpp"
#include "smotext/embedding.hpp"
#include "smotext/error.hpp"

namespace smotext {

/// Ordered collection of (id, label, vector) with a shared dimension and a
/// dense label table. Ids are unique; label ids are dense 0..L-1 in the
/// order labels were interned.
class VectorStore {
 public:
  struct Entry {
    std::string id;
    std::uint32_t label_id;
    EmbeddingVector vec;
  };

  explicit VectorStore(std::uint32_t dim) : dim_(dim) {}

  /// Pre-intern a label table so related stores share label ids.
  VectorStore(std::uint32_t dim, const std::vector<std::string>& labels) : dim_(dim) {
    for (const auto& lab : labels) intern_label(lab);
  }

  std::uint32_t dim() const { return dim_; }
  const std::vector<Entry>& entries() const { return entries_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::uint32_t intern_label(const std::string& label) {
    auto it = label_index_.find(label);
    if (it != label_index_.end()) return it->second;
    auto id = static_cast<std::uint32_t>(labels_.size());
    labels_.push_back(label);
    label_index_.emplace(label, id);
    return id;
  }

  const std::string& label_name(std::uint32_t label_id) const {
    if (label_id >= labels_.size())
      throw DataError("store: label id " + std::to_string(label_id) + " out of range");
    return labels_[label_id];
  }

  void add(std::string id, const std::string& label, EmbeddingVector vec) {
    if (vec.dim() != dim_)
      throw DataError("store: vector for \"" + id + "\" has dim " +
                      std::to_string(vec.dim()) + ", store dim is " +
                      std::to_string(dim_));
    if (!all_finite(vec))
      throw DataError("store: vector for \"" + id + "\" has non-finite entries");
    if (!id_index_.emplace(id, entries_.size()).second)
      throw DataError("store: duplicate id \"" + id + "\"");
    entries_.push_back({std::move(id), intern_label(label), std::move(vec)});
  }

  bool contains(const std::string& id) const { return id_index_.count(id) != 0; }

  std::size_t index_of(const std::string& id) const {
    auto it = id_index_.find(id);
    if (it == id_index_.end())
      throw DataError("store: unknown id \"" + id + "\"");
    return it->second;
  }

  const Entry& by_id(const std::string& id) const { return entries_[index_of(id)]; }

  /// Entry indices per label id, in entry order.
  std::vector<std::vector<std::size_t>> indices_by_label() const {
    std::vector<std::vector<std::size_t>> out(labels_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i)
      out[entries_[i].label_id].push_back(i);
    return out;
  }

  bool operator==(const VectorStore& o) const {
    if (dim_ != o.dim_ || labels_ != o.labels_ || entries_.size() != o.entries_.size())
      return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const Entry& a = entries_[i];
      const Entry& b = o.entries_[i];
      if (a.id != b.id || a.label_id != b.label_id || !(a.vec == b.vec)) return false;
    }
    return true;
  }

 private:
  std::uint32_t dim_;
  std::vector<std::string> labels_;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::uint32_t> label_index_;
  std::unordered_map<std::string, std::size_t> id_index_;
};

namespace detail {
inline constexpr char kStoreMagic[4] = {'S', 'M', 'T', 'X'};
inline constexpr std::uint32_t kStoreVersion = 1;
}  // namespace detail

/// Serialize a store to the SMTX container. Little-endian throughout:
/// magic "SMTX", version u32, dim u32, label count u32, label table
/// (u16 length + UTF-8 each), entry count u64, entries (u16 id length +
/// UTF-8 id, u32 label id, dim * f32), CRC32 of all preceding bytes.
/// Bytes are identical across platforms for identical stores.
inline std::string serialize_store(const VectorStore& store) {
  std::string buf;
  buf.append(detail::kStoreMagic, 4);
  detail::put_u32(buf, detail::kStoreVersion);
  detail::put_u32(buf, store.dim());
  detail::put_u32(buf, static_cast<std::uint32_t>(store.labels().size()));
  for (const auto& lab : store.labels()) {
    if (lab.size() > 0xFFFF) throw DataError("store: label longer than 65535 bytes");
    detail::put_u16(buf, static_cast<std::uint16_t>(lab.size()));
    buf += lab;
  }
  detail::put_u64(buf, store.size());
  for (const auto& e : store.entries()) {
    if (e.id.size() > 0xFFFF) throw DataError("store: id longer than 65535 bytes");
    detail::put_u16(buf, static_cast<std::uint16_t>(e.id.size()));
    buf += e.id;
    detail::put_u32(buf, e.label_id);
    for (float x : e.vec.values) detail::put_f32(buf, x);
  }
  detail::put_u32(buf, detail::crc32(buf));
  return buf;
}

inline void write_store(const VectorStore& store, const std::string& path) {
  std::string buf = serialize_store(store);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write store file: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("short write to store file: " + path);
}

inline VectorStore parse_store(const std::string& buf, const std::string& what) {
  if (buf.size() < 4 || std::string_view(buf.data(), 4) !=
                            std::string_view(detail::kStoreMagic, 4))
    throw DataError(what + ": bad magic, not an SMTX store");
  if (buf.size() < 8) throw DataError(what + ": truncated file");
  std::uint32_t stored_crc = 0;
  {
    detail::ByteReader tail(buf, what);
    tail.bytes(buf.size() - 4);
    stored_crc = tail.u32();
  }
  std::uint32_t actual_crc = detail::crc32(buf.data(), buf.size() - 4);
  if (stored_crc != actual_crc)
    throw DataError(what + ": checksum mismatch (file may be corrupt or truncated)");

  detail::ByteReader r(buf, what);
  r.bytes(4);  // magic
  std::uint32_t version = r.u32();
  if (version != detail::kStoreVersion)
    throw DataError(what + ": unsupported store version " + std::to_string(version));
  std::uint32_t dim = r.u32();
  std::uint32_t label_count = r.u32();
  std::vector<std::string> labels;
  labels.reserve(label_count);
  for (std::uint32_t i = 0; i < label_count; ++i) {
    std::uint16_t len = r.u16();
    labels.push_back(r.bytes(len));
  }
  VectorStore store(dim, labels);
  if (store.labels().size() != label_count)
    throw DataError(what + ": duplicate label in label table");
  std::uint64_t entry_count = r.u64();
  for (std::uint64_t i = 0; i < entry_count; ++i) {
    std::uint16_t id_len = r.u16();
    std::string id = r.bytes(id_len);
    std::uint32_t label_id = r.u32();
    if (label_id >= label_count)
      throw DataError(what + ": entry \"" + id + "\" references label id " +
                      std::to_string(label_id) + " outside the label table");
    EmbeddingVector vec;
    vec.values.reserve(dim);
    for (std::uint32_t d = 0; d < dim; ++d) vec.values.push_back(r.f32());
    store.add(std::move(id), labels[label_id], std::move(vec));
  }
  if (r.pos() + 4 != buf.size())
    throw DataError(what + ": trailing bytes after entry table");
  return store;
}

inline VectorStore read_store(const std::string& path) {
  return parse_store(detail::read_file(path), path);
}

}  // namespace smotext
