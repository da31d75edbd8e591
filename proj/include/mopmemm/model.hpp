// Maxent edge-conditional models: per-edge-class weight tables, the
// conditional distribution p(child | parent, x), and its parameter
// gradients. Parameters live in dense (predicate, label) tables; sparseness
// lives in the predicate vectors.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mopmemm/core.hpp"

namespace mopmemm {

enum class EdgeClass : std::uint8_t { local = 0, skip = 1, incoming = 2, outgoing = 3 };

inline constexpr std::array<std::string_view, 4> kEdgeClassNames = {"local", "skip", "incoming",
                                                                    "outgoing"};

inline std::string_view to_string(EdgeClass c) {
  return kEdgeClassNames[static_cast<std::size_t>(c)];
}

inline EdgeClass edge_class_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kEdgeClassNames.size(); ++i)
    if (kEdgeClassNames[i] == name) return static_cast<EdgeClass>(i);
  throw format_error("unknown edge class '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// EdgeClassModel: one maxent conditional family.
//   node weights  mu[t][y]       (predicate-id t, child label y)
//   pair weights  lambda[s][yp][y] (predicate-id s, parent label yp, child y)
// The parent dimension has one extra row (index |Y|) for the reserved START
// parent used by parentless nodes.
// ---------------------------------------------------------------------------

class EdgeClassModel {
 public:
  EdgeClassModel() = default;

  EdgeClassModel(EdgeClass cls, int num_labels, int node_vocab, int pair_vocab)
      : cls_(cls),
        num_labels_(num_labels),
        node_vocab_(node_vocab),
        pair_vocab_(pair_vocab),
        mu_(static_cast<std::size_t>(node_vocab) * static_cast<std::size_t>(num_labels), 0.0),
        lambda_(static_cast<std::size_t>(pair_vocab) * static_cast<std::size_t>(num_labels + 1) *
                    static_cast<std::size_t>(num_labels),
                0.0) {}

  EdgeClass edge_class() const { return cls_; }
  int num_labels() const { return num_labels_; }
  int node_vocab() const { return node_vocab_; }
  int pair_vocab() const { return pair_vocab_; }

  double mu(std::int32_t pred, int child) const { return mu_[mu_offset(pred, child)]; }
  double& mu(std::int32_t pred, int child) { return mu_[mu_offset(pred, child)]; }

  double lambda(std::int32_t pred, int parent, int child) const {
    return lambda_[lambda_offset(pred, parent, child)];
  }
  double& lambda(std::int32_t pred, int parent, int child) {
    return lambda_[lambda_offset(pred, parent, child)];
  }

  std::span<const double> mu_table() const { return mu_; }
  std::span<const double> lambda_table() const { return lambda_; }
  std::span<double> mu_table() { return mu_; }
  std::span<double> lambda_table() { return lambda_; }

  void check_finite() const {
    for (double w : mu_)
      if (!std::isfinite(w)) throw numeric_error("EdgeClassModel: non-finite node weight");
    for (double w : lambda_)
      if (!std::isfinite(w)) throw numeric_error("EdgeClassModel: non-finite pair weight");
  }

 private:
  std::size_t mu_offset(std::int32_t pred, int child) const {
    if (pred < 0 || pred >= node_vocab_ || child < 0 || child >= num_labels_)
      throw structural_error("EdgeClassModel: mu index out of range");
    return static_cast<std::size_t>(pred) * static_cast<std::size_t>(num_labels_) +
           static_cast<std::size_t>(child);
  }

  std::size_t lambda_offset(std::int32_t pred, int parent, int child) const {
    if (pred < 0 || pred >= pair_vocab_ || parent < 0 || parent > num_labels_ || child < 0 ||
        child >= num_labels_)
      throw structural_error("EdgeClassModel: lambda index out of range");
    return (static_cast<std::size_t>(pred) * static_cast<std::size_t>(num_labels_ + 1) +
            static_cast<std::size_t>(parent)) *
               static_cast<std::size_t>(num_labels_) +
           static_cast<std::size_t>(child);
  }

  EdgeClass cls_ = EdgeClass::local;
  int num_labels_ = 0;
  int node_vocab_ = 0;
  int pair_vocab_ = 0;
  std::vector<double> mu_;
  std::vector<double> lambda_;
};

// ---------------------------------------------------------------------------
// ParameterLayout: bijection between flat parameter indices and
// (class, table, coordinates) triples, used by the optimizer and the
// sparse gradients.
// ---------------------------------------------------------------------------

struct ParameterCoord {
  EdgeClass cls;
  bool is_lambda;
  std::int32_t pred;
  int parent;  // -1 for mu entries
  int child;
};

class ParameterLayout {
 public:
  ParameterLayout() = default;

  ParameterLayout(int num_labels, int node_vocab, int pair_vocab, std::vector<EdgeClass> classes)
      : num_labels_(num_labels),
        node_vocab_(node_vocab),
        pair_vocab_(pair_vocab),
        classes_(std::move(classes)) {}

  int num_labels() const { return num_labels_; }
  int node_vocab() const { return node_vocab_; }
  int pair_vocab() const { return pair_vocab_; }
  const std::vector<EdgeClass>& classes() const { return classes_; }

  std::int64_t mu_block() const {
    return static_cast<std::int64_t>(node_vocab_) * num_labels_;
  }
  std::int64_t lambda_block() const {
    return static_cast<std::int64_t>(pair_vocab_) * (num_labels_ + 1) * num_labels_;
  }
  std::int64_t class_block() const { return mu_block() + lambda_block(); }
  std::int64_t total() const { return class_block() * static_cast<std::int64_t>(classes_.size()); }

  int class_position(EdgeClass c) const {
    for (int i = 0; i < static_cast<int>(classes_.size()); ++i)
      if (classes_[static_cast<std::size_t>(i)] == c) return i;
    throw structural_error("ParameterLayout: edge class not in layout");
  }

  std::int64_t mu_index(EdgeClass c, std::int32_t pred, int child) const {
    return class_block() * class_position(c) + static_cast<std::int64_t>(pred) * num_labels_ +
           child;
  }

  std::int64_t lambda_index(EdgeClass c, std::int32_t pred, int parent, int child) const {
    return class_block() * class_position(c) + mu_block() +
           (static_cast<std::int64_t>(pred) * (num_labels_ + 1) + parent) * num_labels_ + child;
  }

  ParameterCoord decode(std::int64_t index) const {
    if (index < 0 || index >= total()) throw structural_error("ParameterLayout: index out of range");
    const std::int64_t block = class_block();
    const int cpos = static_cast<int>(index / block);
    std::int64_t rest = index % block;
    ParameterCoord coord;
    coord.cls = classes_[static_cast<std::size_t>(cpos)];
    if (rest < mu_block()) {
      coord.is_lambda = false;
      coord.pred = static_cast<std::int32_t>(rest / num_labels_);
      coord.parent = -1;
      coord.child = static_cast<int>(rest % num_labels_);
    } else {
      rest -= mu_block();
      coord.is_lambda = true;
      const std::int64_t row = rest / num_labels_;
      coord.child = static_cast<int>(rest % num_labels_);
      coord.pred = static_cast<std::int32_t>(row / (num_labels_ + 1));
      coord.parent = static_cast<int>(row % (num_labels_ + 1));
    }
    return coord;
  }

 private:
  int num_labels_ = 0;
  int node_vocab_ = 0;
  int pair_vocab_ = 0;
  std::vector<EdgeClass> classes_;
};

// ---------------------------------------------------------------------------
// ModelSet: the label set plus one EdgeClassModel per edge class, with
// lossless pack/unpack to a flat weight vector (the optimizer's view).
// ---------------------------------------------------------------------------

class ModelSet {
 public:
  ModelSet() = default;

  ModelSet(LabelSet labels, ParameterLayout layout) : labels_(std::move(labels)), layout_(layout) {
    for (EdgeClass c : layout_.classes())
      models_.emplace_back(c, layout_.num_labels(), layout_.node_vocab(), layout_.pair_vocab());
  }

  const LabelSet& labels() const { return labels_; }
  const ParameterLayout& layout() const { return layout_; }

  const EdgeClassModel& for_class(EdgeClass c) const {
    return models_[static_cast<std::size_t>(layout_.class_position(c))];
  }
  EdgeClassModel& for_class(EdgeClass c) {
    return models_[static_cast<std::size_t>(layout_.class_position(c))];
  }

  const std::vector<EdgeClassModel>& models() const { return models_; }

  std::vector<double> pack() const {
    std::vector<double> theta;
    theta.reserve(static_cast<std::size_t>(layout_.total()));
    for (const EdgeClassModel& m : models_) {
      theta.insert(theta.end(), m.mu_table().begin(), m.mu_table().end());
      theta.insert(theta.end(), m.lambda_table().begin(), m.lambda_table().end());
    }
    return theta;
  }

  void unpack(std::span<const double> theta) {
    if (static_cast<std::int64_t>(theta.size()) != layout_.total())
      throw structural_error("ModelSet::unpack: size mismatch");
    std::size_t pos = 0;
    for (EdgeClassModel& m : models_) {
      std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(pos), m.mu_table().size(),
                  m.mu_table().begin());
      pos += m.mu_table().size();
      std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(pos), m.lambda_table().size(),
                  m.lambda_table().begin());
      pos += m.lambda_table().size();
    }
  }

 private:
  LabelSet labels_;
  ParameterLayout layout_;
  std::vector<EdgeClassModel> models_;
};

// ---------------------------------------------------------------------------
// Scoring. Scores are accumulated per child label, then normalized in log
// space with max subtraction, so any finite weights are safe.
// ---------------------------------------------------------------------------

inline void score_children(const EdgeClassModel& model, const PredicateVector& node_preds,
                           const PredicateVector& pair_preds, int parent_label,
                           std::span<double> scores) {
  const int y = model.num_labels();
  if (parent_label < 0 || parent_label > y)
    throw structural_error("score_children: parent label out of range");
  if (static_cast<int>(scores.size()) != y)
    throw structural_error("score_children: bad score buffer");
  std::fill(scores.begin(), scores.end(), 0.0);
  for (const PredEntry& e : node_preds) {
    if (e.id >= model.node_vocab()) continue;
    for (int c = 0; c < y; ++c) scores[static_cast<std::size_t>(c)] += model.mu(e.id, c) * e.value;
  }
  for (const PredEntry& e : pair_preds) {
    if (e.id >= model.pair_vocab()) continue;
    for (int c = 0; c < y; ++c)
      scores[static_cast<std::size_t>(c)] += model.lambda(e.id, parent_label, c) * e.value;
  }
  for (double s : scores)
    if (!std::isfinite(s)) throw numeric_error("score_children: non-finite score");
}

inline void softmax_in_place(std::span<double> scores) {
  double m = scores[0];
  for (double s : scores) m = std::max(m, s);
  double sum = 0.0;
  for (double& s : scores) {
    s = std::exp(s - m);
    sum += s;
  }
  for (double& s : scores) s /= sum;
}

// p(child | parent, x) for one edge.
inline Distribution edge_conditional(const EdgeClassModel& model, const PredicateVector& node_preds,
                                     const PredicateVector& pair_preds, int parent_label) {
  Distribution d;
  d.probs.resize(static_cast<std::size_t>(model.num_labels()));
  score_children(model, node_preds, pair_preds, parent_label, d.probs);
  softmax_in_place(d.probs);
  return d;
}

// log p(child | parent, x); used by the chain Viterbi decoder.
inline std::vector<double> edge_log_conditional(const EdgeClassModel& model,
                                                const PredicateVector& node_preds,
                                                const PredicateVector& pair_preds,
                                                int parent_label) {
  std::vector<double> scores(static_cast<std::size_t>(model.num_labels()));
  score_children(model, node_preds, pair_preds, parent_label, scores);
  const double lz = log_sum_exp(scores);
  for (double& s : scores) s -= lz;
  return scores;
}

// ---------------------------------------------------------------------------
// Gradients of the conditional. For an active node predicate t with value g,
//   d p(y) / d mu[t][c] = p(y) * g * (1{c==y} - p(c)),
// and analogously for pair predicates in the lambda row of the conditioning
// parent. Parameters of inactive predicates have exactly zero derivative and
// never appear in the output.
// ---------------------------------------------------------------------------

struct EdgeConditionalGrad {
  Distribution dist;
  // grads[y] holds d p(y | parent, x) / d theta for every touched parameter.
  std::vector<SparseGradient> grads;
};

inline EdgeConditionalGrad edge_conditional_grad(const EdgeClassModel& model,
                                                 const ParameterLayout& layout,
                                                 const PredicateVector& node_preds,
                                                 const PredicateVector& pair_preds,
                                                 int parent_label) {
  EdgeConditionalGrad out;
  out.dist = edge_conditional(model, node_preds, pair_preds, parent_label);
  const int y = model.num_labels();
  out.grads.resize(static_cast<std::size_t>(y));
  const EdgeClass cls = model.edge_class();
  for (int yk = 0; yk < y; ++yk) {
    SparseGradient& g = out.grads[static_cast<std::size_t>(yk)];
    const double pk = out.dist[yk];
    for (int c = 0; c < y; ++c) {
      const double factor = pk * ((c == yk ? 1.0 : 0.0) - out.dist[c]);
      if (factor == 0.0) continue;
      for (const PredEntry& e : node_preds) {
        if (e.id >= model.node_vocab()) continue;
        g.add(layout.mu_index(cls, e.id, c), factor * e.value);
      }
      for (const PredEntry& e : pair_preds) {
        if (e.id >= model.pair_vocab()) continue;
        g.add(layout.lambda_index(cls, e.id, parent_label, c), factor * e.value);
      }
    }
  }
  return out;
}

}  // namespace mopmemm
