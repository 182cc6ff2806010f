#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "smotext/embedding.hpp"
#include "smotext/error.hpp"
#include "smotext/parallel.hpp"
#include "smotext/rng.hpp"
#include "smotext/store.hpp"

namespace smotext {

/// Mixing coefficient for convex combination, validated into [0,1].
class MixCoefficient {
 public:
  explicit MixCoefficient(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0))
      throw DataError("lambda must lie in [0,1], got " + std::to_string(value));
  }
  double value() const { return value_; }

 private:
  double value_;
};

struct LambdaPolicy {
  enum class Kind { uniform, fixed };
  Kind kind = Kind::uniform;
  double fixed_value = 0.5;

  static LambdaPolicy uniform() { return {Kind::uniform, 0.0}; }
  static LambdaPolicy fixed(double v) {
    if (!(v >= 0.0 && v <= 1.0))
      throw ConfigError("fixed lambda must lie in [0,1], got " + std::to_string(v));
    return {Kind::fixed, v};
  }
};

enum class Metric { cosine, euclidean };

inline Metric metric_from_string(const std::string& s) {
  if (s == "cosine") return Metric::cosine;
  if (s == "euclidean") return Metric::euclidean;
  throw ConfigError("unknown metric \"" + s + "\" (expected cosine or euclidean)");
}

inline double pair_distance(const EmbeddingVector& a, const EmbeddingVector& b,
                            Metric metric) {
  return metric == Metric::cosine ? 1.0 - cosine_similarity(a, b)
                                  : euclidean_distance(a, b);
}

/// The k nearest same-class entries to query_id, ascending distance, ties
/// broken by ascending entry index; the query itself is excluded. Returns
/// all same-class neighbors when fewer than k exist.
inline std::vector<std::string> knn_within_class(const VectorStore& store,
                                                 const std::string& query_id,
                                                 std::size_t k, Metric metric) {
  const auto& query = store.entries()[store.index_of(query_id)];
  std::vector<std::pair<double, std::size_t>> candidates;
  for (std::size_t i = 0; i < store.entries().size(); ++i) {
    const auto& e = store.entries()[i];
    if (e.label_id != query.label_id || e.id == query_id) continue;
    candidates.emplace_back(pair_distance(query.vec, e.vec, metric), i);
  }
  if (candidates.empty())
    throw DataError("knn: class \"" + store.label_name(query.label_id) +
                    "\" has no neighbor for \"" + query_id + "\"");
  std::sort(candidates.begin(), candidates.end());  // (distance, index) pairs
  std::vector<std::string> ids;
  ids.reserve(std::min(k, candidates.size()));
  for (std::size_t i = 0; i < candidates.size() && i < k; ++i)
    ids.push_back(store.entries()[candidates[i].second].id);
  return ids;
}

/// Draw a mixing coefficient. Uniform policy consumes one draw from the
/// stream; fixed policy consumes none.
inline MixCoefficient sample_lambda(const LambdaPolicy& policy, SplitMix64& stream) {
  if (policy.kind == LambdaPolicy::Kind::fixed) {
    if (!(policy.fixed_value >= 0.0 && policy.fixed_value <= 1.0))
      throw ConfigError("fixed lambda outside [0,1]");
    return MixCoefficient(policy.fixed_value);
  }
  return MixCoefficient(stream.uniform01());
}

/// Componentwise convex combination lambda*a + (1-lambda)*b. No
/// renormalization. lambda=1 returns a exactly, lambda=0 returns b exactly.
inline EmbeddingVector interpolate(const EmbeddingVector& a, const EmbeddingVector& b,
                                   const MixCoefficient& lambda) {
  if (a.dim() != b.dim())
    throw DataError("interpolate: dimension mismatch " + std::to_string(a.dim()) +
                    " vs " + std::to_string(b.dim()));
  double l = lambda.value();
  double m = 1.0 - l;
  EmbeddingVector out;
  out.values.reserve(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    out.values.push_back(static_cast<float>(l * static_cast<double>(a.values[i]) +
                                            m * static_cast<double>(b.values[i])));
  return out;
}

/// Interpolated vector plus provenance. Parents are distinct members of the
/// record's class; the vector is the convex combination at `lambda`.
struct SyntheticRecord {
  std::string id;
  std::string parent_a;
  std::string parent_b;
  double lambda = 0.0;
  EmbeddingVector vec;
  std::string label;
  std::optional<std::string> text;
  std::optional<std::string> decode_error;
};

/// Per-class synthetic quotas plus the pairing and lambda policy that
/// realize them. Quotas are kept in label order so remainder distribution
/// and generation order are deterministic.
struct AugmentationPlan {
  std::vector<std::pair<std::string, std::uint64_t>> per_class;
  std::size_t k_neighbors = 5;
  LambdaPolicy lambda_policy;
  Metric metric = Metric::cosine;
  bool renormalize = false;
  std::uint64_t seed = 0;

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& [_, n] : per_class) t += n;
    return t;
  }
};

struct PlanTarget {
  enum class Kind { per_class, total_budget, balance_to_max };
  Kind kind = Kind::total_budget;
  std::uint64_t total_budget = 0;
  std::vector<std::pair<std::string, std::uint64_t>> quotas;  // per_class only

  static PlanTarget budget(std::uint64_t total) {
    PlanTarget t;
    t.kind = Kind::total_budget;
    t.total_budget = total;
    return t;
  }
  static PlanTarget balance() {
    PlanTarget t;
    t.kind = Kind::balance_to_max;
    return t;
  }
  static PlanTarget explicit_quotas(std::vector<std::pair<std::string, std::uint64_t>> q) {
    PlanTarget t;
    t.kind = Kind::per_class;
    t.quotas = std::move(q);
    return t;
  }
};

/// Resolve a target into per-class quotas. A total budget is split evenly
/// across classes with the remainder going +1 to classes in label order;
/// balance_to_max gives every class max_count - count_c. Classes with fewer
/// than 2 real examples cannot take a positive quota.
inline AugmentationPlan build_plan(
    const std::vector<std::pair<std::string, std::size_t>>& class_counts,
    const PlanTarget& target, std::size_t k_neighbors, LambdaPolicy lambda_policy,
    std::uint64_t seed) {
  if (k_neighbors < 1) throw ConfigError("plan: k_neighbors must be >= 1");
  AugmentationPlan plan;
  plan.k_neighbors = k_neighbors;
  plan.lambda_policy = lambda_policy;
  plan.seed = seed;

  switch (target.kind) {
    case PlanTarget::Kind::per_class: {
      for (const auto& [label, quota] : target.quotas) {
        bool known = false;
        for (const auto& [lab, _] : class_counts) known |= (lab == label);
        if (!known) throw ConfigError("plan: quota for unknown class \"" + label + "\"");
      }
      // keep label order, default absent classes to 0
      for (const auto& [label, _] : class_counts) {
        std::uint64_t quota = 0;
        for (const auto& [lab, q] : target.quotas)
          if (lab == label) quota = q;
        plan.per_class.emplace_back(label, quota);
      }
      break;
    }
    case PlanTarget::Kind::total_budget: {
      std::uint64_t num_classes = class_counts.size();
      if (num_classes == 0) throw DataError("plan: no classes");
      std::uint64_t base = target.total_budget / num_classes;
      std::uint64_t rem = target.total_budget % num_classes;
      for (std::size_t c = 0; c < class_counts.size(); ++c)
        plan.per_class.emplace_back(class_counts[c].first, base + (c < rem ? 1 : 0));
      break;
    }
    case PlanTarget::Kind::balance_to_max: {
      std::size_t max_count = 0;
      for (const auto& [_, n] : class_counts) max_count = std::max(max_count, n);
      for (const auto& [label, n] : class_counts)
        plan.per_class.emplace_back(label, static_cast<std::uint64_t>(max_count - n));
      break;
    }
  }

  for (const auto& [label, quota] : plan.per_class) {
    if (quota == 0) continue;
    for (const auto& [lab, n] : class_counts)
      if (lab == label && n < 2)
        throw DataError("plan: class \"" + label + "\" has " + std::to_string(n) +
                        " example(s), cannot synthesize from it");
  }
  return plan;
}

/// SMOTE-style generation: for class c and slot j, a stream derived from
/// (seed, c, j) picks a base member uniformly, a partner uniformly among
/// the base's k nearest same-class neighbors, and a lambda; the record is
/// the convex combination with id "syn-<label>-<j>". Per-slot streams make
/// the output independent of scheduling, so any thread count produces the
/// identical record list.
inline std::vector<SyntheticRecord> generate_synthetic_vectors(
    const VectorStore& store, const AugmentationPlan& plan, unsigned threads = 1) {
  auto by_label = store.indices_by_label();

  struct Slot {
    std::size_t class_pos;
    std::uint64_t j;
  };
  std::vector<Slot> slots;
  std::vector<const std::vector<std::size_t>*> members_of;
  members_of.reserve(plan.per_class.size());
  for (std::size_t c = 0; c < plan.per_class.size(); ++c) {
    const auto& [label, quota] = plan.per_class[c];
    const std::vector<std::size_t>* members = nullptr;
    for (std::size_t l = 0; l < store.labels().size(); ++l)
      if (store.labels()[l] == label) members = &by_label[l];
    if (quota > 0) {
      if (members == nullptr || members->size() < 2)
        throw DataError("generate: class \"" + label + "\" needs at least 2 store entries");
      for (std::uint64_t j = 0; j < quota; ++j) slots.push_back({c, j});
    }
    members_of.push_back(members);
  }

  std::vector<SyntheticRecord> records(slots.size());
  detail::parallel_for(slots.size(), threads, [&](std::size_t s) {
    const auto& [label, quota] = plan.per_class[slots[s].class_pos];
    (void)quota;
    const auto& members = *members_of[slots[s].class_pos];
    std::uint64_t j = slots[s].j;
    SplitMix64 rng = derive_stream(plan.seed, "generate", label, j);

    const auto& base = store.entries()[members[rng.below(members.size())]];
    auto neighbor_ids = knn_within_class(store, base.id, plan.k_neighbors, plan.metric);
    const std::string& partner_id = neighbor_ids[rng.below(neighbor_ids.size())];
    const auto& partner = store.entries()[store.index_of(partner_id)];
    MixCoefficient lambda = sample_lambda(plan.lambda_policy, rng);

    SyntheticRecord rec;
    rec.id = "syn-" + label + "-" + std::to_string(j);
    rec.parent_a = base.id;
    rec.parent_b = partner.id;
    rec.lambda = lambda.value();
    rec.vec = interpolate(base.vec, partner.vec, lambda);
    if (plan.renormalize) rec.vec = l2_normalize(rec.vec);
    rec.label = label;
    records[s] = std::move(rec);
  });
  return records;
}

}  // namespace smotext
