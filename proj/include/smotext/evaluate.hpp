#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "smotext/embedding.hpp"
#include "smotext/error.hpp"
#include "smotext/latent.hpp"
#include "smotext/parallel.hpp"
#include "smotext/store.hpp"

namespace smotext {

struct SoftmaxHyper {
  double l2 = 1e-4;
  double lr = 0.5;
  std::uint64_t iters = 500;
};

/// Multinomial logistic-regression head over embeddings: C x d weights plus
/// bias, class order fixed at training time.
class SoftmaxModel {
 public:
  SoftmaxModel(std::vector<std::string> classes, std::size_t dim)
      : classes_(std::move(classes)), dim_(dim),
        weights_(classes_.size() * dim, 0.0), bias_(classes_.size(), 0.0) {}

  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t dim() const { return dim_; }
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& bias() const { return bias_; }

  std::vector<double> logits(const EmbeddingVector& x) const {
    if (x.dim() != dim_)
      throw DataError("predict: feature dim " + std::to_string(x.dim()) +
                      " does not match model dim " + std::to_string(dim_));
    std::vector<double> z(classes_.size());
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      const double* row = weights_.data() + c * dim_;
      double acc = bias_[c];
      for (std::size_t d = 0; d < dim_; ++d)
        acc += row[d] * static_cast<double>(x.values[d]);
      z[c] = acc;
    }
    return z;
  }

  /// Softmax probabilities, max-shifted for stability.
  std::vector<double> probabilities(const EmbeddingVector& x) const {
    std::vector<double> z = logits(x);
    double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
      v = std::exp(v - zmax);
      sum += v;
    }
    for (double& v : z) v /= sum;
    return z;
  }

 private:
  std::vector<std::string> classes_;
  std::size_t dim_;
  std::vector<double> weights_;  // row-major C x d
  std::vector<double> bias_;
};

namespace detail {

inline std::vector<std::size_t> class_indices(const std::vector<std::string>& labels,
                                              const std::vector<std::string>& classes) {
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < classes.size(); ++i) pos[classes[i]] = i;
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (const auto& lab : labels) {
    auto it = pos.find(lab);
    if (it == pos.end())
      throw DataError("label \"" + lab + "\" is not in the class order");
    out.push_back(it->second);
  }
  return out;
}

}  // namespace detail

/// L2-regularized multinomial cross-entropy: mean over samples plus
/// (l2/2)*||W||^2 (bias unregularized). Used by training and by the
/// finite-difference checks.
inline double softmax_loss(const SoftmaxModel& model,
                           const std::vector<EmbeddingVector>& features,
                           const std::vector<std::size_t>& targets, double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    std::vector<double> z = model.logits(features[i]);
    double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    loss += -(z[targets[i]] - zmax - std::log(sum));
  }
  loss /= static_cast<double>(features.size());
  double reg = 0.0;
  for (double w : model.weights()) reg += w * w;
  return loss + 0.5 * l2 * reg;
}

/// Analytic gradient of softmax_loss, packed as (C x d weights, C bias).
inline void softmax_gradient(const SoftmaxModel& model,
                             const std::vector<EmbeddingVector>& features,
                             const std::vector<std::size_t>& targets, double l2,
                             std::vector<double>& grad_w, std::vector<double>& grad_b) {
  std::size_t C = model.classes().size();
  std::size_t D = model.dim();
  grad_w.assign(C * D, 0.0);
  grad_b.assign(C, 0.0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    std::vector<double> p = model.probabilities(features[i]);
    p[targets[i]] -= 1.0;
    for (std::size_t c = 0; c < C; ++c) {
      double coeff = p[c];
      if (coeff == 0.0) continue;
      double* row = grad_w.data() + c * D;
      for (std::size_t d = 0; d < D; ++d)
        row[d] += coeff * static_cast<double>(features[i].values[d]);
      grad_b[c] += coeff;
    }
  }
  double inv_n = 1.0 / static_cast<double>(features.size());
  for (std::size_t k = 0; k < grad_w.size(); ++k)
    grad_w[k] = grad_w[k] * inv_n + l2 * model.weights()[k];
  for (std::size_t c = 0; c < C; ++c) grad_b[c] *= inv_n;
}

/// Full-batch gradient descent from zero initialization. Deterministic:
/// the convex objective plus zero init means no randomness enters training.
/// Non-finite loss raises a divergence error.
inline SoftmaxModel train_softmax(const std::vector<EmbeddingVector>& features,
                                  const std::vector<std::string>& labels,
                                  const std::vector<std::string>& class_order,
                                  const SoftmaxHyper& hyper,
                                  std::vector<double>* loss_history = nullptr) {
  if (features.empty()) throw DataError("train_softmax: no training features");
  if (features.size() != labels.size())
    throw DataError("train_softmax: feature/label count mismatch");
  std::size_t dim = features[0].dim();
  for (const auto& f : features)
    if (f.dim() != dim) throw DataError("train_softmax: inconsistent feature dims");
  if (class_order.size() < 2)
    throw DataError("train_softmax: need at least 2 classes");
  {
    std::unordered_map<std::string, std::size_t> distinct;
    for (const auto& lab : labels) distinct.emplace(lab, distinct.size());
    if (distinct.size() < 2)
      throw DataError("train_softmax: training labels cover a single class");
  }
  if (hyper.l2 < 0.0) throw ConfigError("train_softmax: l2 must be >= 0");

  SoftmaxModel model(class_order, dim);
  std::vector<std::size_t> targets = detail::class_indices(labels, class_order);
  std::vector<double> grad_w, grad_b;
  for (std::uint64_t it = 0; it < hyper.iters; ++it) {
    if (loss_history) {
      double loss = softmax_loss(model, features, targets, hyper.l2);
      if (!std::isfinite(loss))
        throw DataError("train_softmax: loss diverged at iteration " + std::to_string(it));
      loss_history->push_back(loss);
    }
    softmax_gradient(model, features, targets, hyper.l2, grad_w, grad_b);
    for (std::size_t k = 0; k < grad_w.size(); ++k)
      model.weights()[k] -= hyper.lr * grad_w[k];
    for (std::size_t c = 0; c < grad_b.size(); ++c)
      model.bias()[c] -= hyper.lr * grad_b[c];
  }
  double final_loss = softmax_loss(model, features, targets, hyper.l2);
  if (!std::isfinite(final_loss))
    throw DataError("train_softmax: loss diverged (learning rate too large)");
  if (loss_history) loss_history->push_back(final_loss);
  return model;
}

/// Convenience overload: class order is the first-appearance order of the
/// training labels.
inline SoftmaxModel train_softmax(const std::vector<EmbeddingVector>& features,
                                  const std::vector<std::string>& labels,
                                  const SoftmaxHyper& hyper) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& lab : labels)
    if (seen.emplace(lab, seen.size()).second) order.push_back(lab);
  return train_softmax(features, labels, order, hyper);
}

/// Argmax of logits per sample; ties resolve to the earliest class in
/// class order.
inline std::vector<std::string> predict(const SoftmaxModel& model,
                                        const std::vector<EmbeddingVector>& features) {
  std::vector<std::string> out;
  out.reserve(features.size());
  for (const auto& f : features) {
    std::vector<double> z = model.logits(f);
    std::size_t best = 0;
    for (std::size_t c = 1; c < z.size(); ++c)
      if (z[c] > z[best]) best = c;
    out.push_back(model.classes()[best]);
  }
  return out;
}

/// Cosine nearest-centroid classifier; ties resolve to the earliest label
/// in class order. Every class must have at least one training vector.
inline std::vector<std::string> nearest_centroid(
    const std::vector<EmbeddingVector>& train_features,
    const std::vector<std::string>& train_labels,
    const std::vector<EmbeddingVector>& test_features,
    const std::vector<std::string>& class_order) {
  if (train_features.size() != train_labels.size())
    throw DataError("nearest_centroid: feature/label count mismatch");
  if (train_features.empty()) throw DataError("nearest_centroid: no training vectors");
  std::size_t dim = train_features[0].dim();
  std::vector<std::size_t> targets = detail::class_indices(train_labels, class_order);
  std::vector<std::vector<double>> sums(class_order.size(), std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(class_order.size(), 0);
  for (std::size_t i = 0; i < train_features.size(); ++i) {
    if (train_features[i].dim() != dim)
      throw DataError("nearest_centroid: inconsistent feature dims");
    for (std::size_t d = 0; d < dim; ++d)
      sums[targets[i]][d] += static_cast<double>(train_features[i].values[d]);
    counts[targets[i]]++;
  }
  std::vector<EmbeddingVector> centroids(class_order.size());
  for (std::size_t c = 0; c < class_order.size(); ++c) {
    if (counts[c] == 0)
      throw DataError("nearest_centroid: class \"" + class_order[c] +
                      "\" has no training vectors");
    EmbeddingVector v;
    v.values.reserve(dim);
    for (std::size_t d = 0; d < dim; ++d)
      v.values.push_back(static_cast<float>(sums[c][d] / static_cast<double>(counts[c])));
    centroids[c] = std::move(v);
  }
  std::vector<std::string> out;
  out.reserve(test_features.size());
  for (const auto& f : test_features) {
    std::size_t best = 0;
    double best_sim = cosine_similarity(f, centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
      double sim = cosine_similarity(f, centroids[c]);
      if (sim > best_sim) {
        best = c;
        best_sim = sim;
      }
    }
    out.push_back(class_order[best]);
  }
  return out;
}

/// Per-condition evaluation result. Confusion rows are gold classes, columns
/// predictions, both in label_set order.
struct EvaluationReport {
  std::string condition;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  std::vector<std::vector<std::uint64_t>> confusion;
  std::uint64_t n_train_real = 0;
  std::uint64_t n_train_synthetic = 0;
  std::uint64_t n_test = 0;
  std::uint64_t seed = 0;
};

/// Accuracy, per-class F1 with the zero-division-is-zero convention, macro
/// mean over the label set, and the weighted mean. Weights for the weighted
/// mean are the per-class predicted-label counts.
inline EvaluationReport compute_metrics(const std::vector<std::string>& pred,
                                        const std::vector<std::string>& gold,
                                        const std::vector<std::string>& label_set) {
  if (pred.size() != gold.size())
    throw DataError("compute_metrics: " + std::to_string(pred.size()) +
                    " predictions for " + std::to_string(gold.size()) + " gold labels");
  if (pred.empty()) throw DataError("compute_metrics: empty input");
  std::vector<std::size_t> p_idx = detail::class_indices(pred, label_set);
  std::vector<std::size_t> g_idx = detail::class_indices(gold, label_set);

  std::size_t C = label_set.size();
  EvaluationReport rep;
  rep.confusion.assign(C, std::vector<std::uint64_t>(C, 0));
  for (std::size_t i = 0; i < pred.size(); ++i) rep.confusion[g_idx[i]][p_idx[i]]++;

  std::uint64_t correct = 0;
  double macro_sum = 0.0;
  double weighted_sum = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    std::uint64_t tp = rep.confusion[c][c];
    std::uint64_t row = 0, col = 0;
    for (std::size_t k = 0; k < C; ++k) {
      row += rep.confusion[c][k];
      col += rep.confusion[k][c];
    }
    correct += tp;
    double precision = col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
    double recall = row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    double f1 =
        precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    macro_sum += f1;
    weighted_sum += static_cast<double>(col) * f1;
  }
  rep.n_test = pred.size();
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(pred.size());
  rep.macro_f1 = macro_sum / static_cast<double>(C);
  rep.weighted_f1 = weighted_sum / static_cast<double>(pred.size());
  return rep;
}

inline nlohmann::ordered_json report_to_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["condition"] = r.condition;
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  j["weighted_f1"] = r.weighted_f1;
  j["confusion"] = r.confusion;
  j["n_train_real"] = r.n_train_real;
  j["n_train_synthetic"] = r.n_train_synthetic;
  j["n_test"] = r.n_test;
  j["seed"] = r.seed;
  return j;
}

/// Side-by-side table in the reference column order.
inline std::string format_report_table(const std::vector<EvaluationReport>& reports) {
  std::ostringstream out;
  out << std::left << std::setw(24) << "Condition" << std::right << std::setw(10)
      << "Accuracy" << std::setw(10) << "Macro F1" << std::setw(13) << "Weighted F1"
      << "\n";
  out << std::string(57, '-') << "\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& r : reports)
    out << std::left << std::setw(24) << r.condition << std::right << std::setw(10)
        << r.accuracy << std::setw(10) << r.macro_f1 << std::setw(13) << r.weighted_f1
        << "\n";
  return out.str();
}

/// Full-scale reference results for the three-condition 20 Newsgroups run
/// (SFR-Embedding-Mistral encoder, xRAG-7B decoder, 1,000 real + 2,600
/// synthetic examples). Requires those models; not reproducible with the
/// desk-scale mock backends, so these are reference metadata only and are
/// never asserted against local runs.
struct ReferenceResult {
  const char* condition;
  double accuracy;
  double macro_f1;
  double weighted_f1;
};

inline constexpr ReferenceResult kFullScaleReference[3] = {
    {"real_only", 0.8361, 0.8382, 0.8382},
    {"real_plus_synthetic", 0.8394, 0.8404, 0.8408},
    {"synthetic_only", 0.8037, 0.8038, 0.8036},
};

enum class SyntheticMode { text, vector_only };
enum class HeadKind { softmax, nearest_centroid };

/// Inputs for the three-condition experiment. The three conditions share
/// the test set, the class order, and the hyperparameters; only the
/// training features differ.
struct ExperimentInputs {
  const VectorStore* train_store = nullptr;
  const VectorStore* test_store = nullptr;
  const std::vector<SyntheticRecord>* synthetic = nullptr;
  Encoder* encoder = nullptr;  // required in text mode for re-encoding
  SyntheticMode mode = SyntheticMode::vector_only;
  HeadKind head = HeadKind::softmax;
  SoftmaxHyper hyper;
  std::vector<std::string> label_set;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

namespace detail {

inline void store_features(const VectorStore& store,
                           std::vector<EmbeddingVector>& features,
                           std::vector<std::string>& labels) {
  for (const auto& e : store.entries()) {
    features.push_back(e.vec);
    labels.push_back(store.label_name(e.label_id));
  }
}

}  // namespace detail

/// Run the three conditions: real_only, real_plus_synthetic, synthetic_only.
/// Synthetic training features come from the interpolated vectors
/// (vector_only) or from re-encoding the decoded texts (text). Conditions
/// whose synthetic side is empty are skipped; callers report that
/// explicitly. Condition evaluation is pure, so running conditions
/// concurrently cannot change results.
inline std::vector<EvaluationReport> run_experiment(const ExperimentInputs& in) {
  if (!in.train_store || !in.test_store || !in.synthetic)
    throw ConfigError("run_experiment: train, test, and synthetic inputs are required");
  if (in.label_set.empty())
    throw ConfigError("run_experiment: label_set must not be empty");

  std::vector<EmbeddingVector> real_features;
  std::vector<std::string> real_labels;
  detail::store_features(*in.train_store, real_features, real_labels);

  std::vector<EmbeddingVector> test_features;
  std::vector<std::string> test_labels;
  detail::store_features(*in.test_store, test_features, test_labels);
  if (test_features.empty()) throw DataError("run_experiment: empty test set");

  std::vector<EmbeddingVector> syn_features;
  std::vector<std::string> syn_labels;
  if (in.mode == SyntheticMode::vector_only) {
    for (const auto& rec : *in.synthetic) {
      syn_features.push_back(rec.vec);
      syn_labels.push_back(rec.label);
    }
  } else {
    if (!in.encoder)
      throw ConfigError("run_experiment: text mode requires an encoder for re-encoding");
    std::vector<std::string> texts;
    for (const auto& rec : *in.synthetic) {
      if (!rec.text.has_value()) continue;  // decode failures stay vector-only
      texts.push_back(*rec.text);
      syn_labels.push_back(rec.label);
    }
    syn_features = encode_batch(*in.encoder, texts);
  }

  struct Condition {
    std::string name;
    std::vector<EmbeddingVector> features;
    std::vector<std::string> labels;
    std::uint64_t n_real;
    std::uint64_t n_syn;
  };
  std::vector<Condition> conditions;
  conditions.push_back({"real_only", real_features, real_labels, real_features.size(), 0});
  if (!syn_features.empty()) {
    Condition mixed{"real_plus_synthetic", real_features, real_labels,
                    real_features.size(), syn_features.size()};
    mixed.features.insert(mixed.features.end(), syn_features.begin(), syn_features.end());
    mixed.labels.insert(mixed.labels.end(), syn_labels.begin(), syn_labels.end());
    conditions.push_back(std::move(mixed));
    conditions.push_back(
        {"synthetic_only", syn_features, syn_labels, 0, syn_features.size()});
  }

  std::vector<EvaluationReport> reports(conditions.size());
  detail::parallel_for(conditions.size(), in.threads, [&](std::size_t i) {
    const Condition& cond = conditions[i];
    std::vector<std::string> pred;
    if (in.head == HeadKind::softmax) {
      SoftmaxModel model =
          train_softmax(cond.features, cond.labels, in.label_set, in.hyper);
      pred = predict(model, test_features);
    } else {
      pred = nearest_centroid(cond.features, cond.labels, test_features, in.label_set);
    }
    EvaluationReport rep = compute_metrics(pred, test_labels, in.label_set);
    rep.condition = cond.name;
    rep.n_train_real = cond.n_real;
    rep.n_train_synthetic = cond.n_syn;
    rep.seed = in.seed;
    reports[i] = std::move(rep);
  });
  return reports;
}

}  // namespace smotext
