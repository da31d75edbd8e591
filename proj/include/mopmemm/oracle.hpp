// Reference implementations kept deliberately naive: full-enumeration
// marginals, central finite differences, the unreordered gradient expansion,
// and a generative sampler for synthetic long-range datasets. These are the
// independent routes the fast paths are checked against.
#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mopmemm/core.hpp"
#include "mopmemm/features.hpp"
#include "mopmemm/graph.hpp"
#include "mopmemm/inference.hpp"
#include "mopmemm/model.hpp"
#include "mopmemm/training.hpp"

namespace mopmemm {

inline constexpr double kEnumerationCap = 1e7;

namespace detail {

inline void check_enumeration_size(int n, int num_labels) {
  double total = 1.0;
  for (int i = 0; i < n; ++i) {
    total *= num_labels;
    if (total > kEnumerationCap)
      throw size_error("brute force: |Y|^n exceeds the enumeration cap");
  }
}

}  // namespace detail

// Probability of one full label assignment under the mixture factorization,
// p(y | x) = prod_k [sum_j alpha_kj p(y_k | y_j, x)], START for parentless.
inline double assignment_probability(const ParentGraph& graph, const EdgeKernels& kernels,
                                     const std::vector<int>& assignment) {
  double joint = 1.0;
  for (int k = 0; k < graph.n; ++k) {
    const int yk = assignment[static_cast<std::size_t>(k)];
    const auto& plist = graph.parents[static_cast<std::size_t>(k)];
    double node;
    if (plist.empty()) {
      node = kernels.start[static_cast<std::size_t>(k)][static_cast<std::size_t>(yk)];
    } else {
      node = 0.0;
      const auto& alpha = graph.alphas[static_cast<std::size_t>(k)];
      for (std::size_t i = 0; i < plist.size(); ++i) {
        const int yj = assignment[static_cast<std::size_t>(plist[i].parent)];
        node += alpha[i] *
                kernels.cond_row(k, static_cast<int>(i), yj)[static_cast<std::size_t>(yk)];
      }
    }
    joint *= node;
  }
  return joint;
}

// Marginals by summing the joint over every label sequence.
inline MarginalTable brute_force_marginals(const ModelSet& models, const ParentGraph& graph,
                                           const FeaturizedInstance& instance) {
  const int y = models.labels().size();
  detail::check_enumeration_size(graph.n, y);
  const EdgeKernels kernels = compute_edge_kernels(models, graph, instance);

  MarginalTable marg(graph.n, y);
  std::vector<int> assignment(static_cast<std::size_t>(graph.n), 0);
  double total = 0.0;
  while (true) {
    const double joint = assignment_probability(graph, kernels, assignment);
    total += joint;
    for (int k = 0; k < graph.n; ++k)
      marg.row(k)[static_cast<std::size_t>(assignment[static_cast<std::size_t>(k)])] += joint;
    // Odometer increment, last position fastest.
    int pos = graph.n - 1;
    while (pos >= 0 && ++assignment[static_cast<std::size_t>(pos)] == y) {
      assignment[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  if (std::abs(total - 1.0) > 1e-10)
    throw numeric_error("brute force: joint does not normalize (total " + std::to_string(total) +
                        ")");
  return marg;
}

// Total probability mass over all assignments; 1 within 1e-10 for any model.
inline double brute_force_total_probability(const ModelSet& models, const ParentGraph& graph,
                                            const FeaturizedInstance& instance) {
  const int y = models.labels().size();
  detail::check_enumeration_size(graph.n, y);
  const EdgeKernels kernels = compute_edge_kernels(models, graph, instance);
  std::vector<int> assignment(static_cast<std::size_t>(graph.n), 0);
  double total = 0.0;
  while (true) {
    total += assignment_probability(graph, kernels, assignment);
    int pos = graph.n - 1;
    while (pos >= 0 && ++assignment[static_cast<std::size_t>(pos)] == y) {
      assignment[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return total;
}

// Exact joint MAP by enumeration in lexicographic order; the first strict
// maximum wins, which matches lowest-label-index tie-breaking.
inline std::vector<int> brute_force_joint_argmax(const ModelSet& models, const ParentGraph& graph,
                                                 const FeaturizedInstance& instance) {
  const int y = models.labels().size();
  detail::check_enumeration_size(graph.n, y);
  const EdgeKernels kernels = compute_edge_kernels(models, graph, instance);
  std::vector<int> assignment(static_cast<std::size_t>(graph.n), 0);
  std::vector<int> best = assignment;
  double best_log = -std::numeric_limits<double>::infinity();
  while (true) {
    double lp = 0.0;
    for (int k = 0; k < graph.n; ++k) {
      const int yk = assignment[static_cast<std::size_t>(k)];
      const auto& plist = graph.parents[static_cast<std::size_t>(k)];
      double node;
      if (plist.empty()) {
        node = kernels.start[static_cast<std::size_t>(k)][static_cast<std::size_t>(yk)];
      } else {
        node = 0.0;
        for (std::size_t i = 0; i < plist.size(); ++i)
          node += graph.alphas[static_cast<std::size_t>(k)][i] *
                  kernels.cond_row(k, static_cast<int>(i),
                                   assignment[static_cast<std::size_t>(plist[i].parent)])
                      [static_cast<std::size_t>(yk)];
      }
      lp += std::log(node);
    }
    if (lp > best_log) {
      best_log = lp;
      best = assignment;
    }
    int pos = graph.n - 1;
    while (pos >= 0 && ++assignment[static_cast<std::size_t>(pos)] == y) {
      assignment[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return best;
}

// Independently coded classical MEMM forward recursion over a chain:
// p_0 = p(. | START), p_k = sum_{y'} p(. | y', x) p_{k-1}(y').
inline MarginalTable memm_chain_forward(const ModelSet& models,
                                        const FeaturizedInstance& instance) {
  const int n = instance.graph.n;
  const int y = models.labels().size();
  const EdgeClassModel& local = models.for_class(EdgeClass::local);
  MarginalTable marg(n, y);
  {
    const Distribution d = edge_conditional(local, instance.node_preds[0], instance.start_preds[0],
                                            models.labels().start_index());
    std::copy(d.probs.begin(), d.probs.end(), marg.row(0).begin());
  }
  for (int k = 1; k < n; ++k) {
    if (instance.graph.parents[static_cast<std::size_t>(k)].size() != 1 ||
        instance.graph.parents[static_cast<std::size_t>(k)][0].parent != k - 1)
      throw structural_error("memm_chain_forward: not a chain");
    std::span<double> out = marg.row(k);
    std::span<const double> prev = marg.row(k - 1);
    for (int yj = 0; yj < y; ++yj) {
      const Distribution d =
          edge_conditional(local, instance.node_preds[static_cast<std::size_t>(k)],
                           instance.edge_preds[static_cast<std::size_t>(k)][0], yj);
      for (int yk = 0; yk < y; ++yk)
        out[static_cast<std::size_t>(yk)] += prev[static_cast<std::size_t>(yj)] * d[yk];
    }
  }
  return marg;
}

// ---------------------------------------------------------------------------
// Central finite differences on a caller-chosen coordinate subset.
// ---------------------------------------------------------------------------

inline std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& objective, std::span<const double> theta,
    double h, std::span<const std::int64_t> coords) {
  if (h <= 0.0) throw structural_error("finite_difference_gradient: h must be positive");
  std::vector<double> probe(theta.begin(), theta.end());
  std::vector<double> grad;
  grad.reserve(coords.size());
  for (std::int64_t c : coords) {
    const auto i = static_cast<std::size_t>(c);
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = objective(probe);
    probe[i] = saved - h;
    const double down = objective(probe);
    probe[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw numeric_error("finite_difference_gradient: non-finite objective at probe point");
    grad.push_back((up - down) / (2.0 * h));
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Naive L_M gradient: the direct recursive expansion
//   v_k = sum_j alpha_kj sum_{y_j} [ p(y_k|y_j) v_j(y_j) + p(y_j|x) u_kj ]
// carrying a full sparse gradient map per (node, label). Supports grow with
// the union of ancestor features, which is exactly the cost the reordered
// computation avoids.
// ---------------------------------------------------------------------------

inline SparseGradient naive_marginal_gradient(const ModelSet& models,
                                              const FeaturizedInstance& instance) {
  const ParentGraph& graph = instance.graph;
  const int y = models.labels().size();
  const int start_label = models.labels().start_index();
  const ParameterLayout& layout = models.layout();
  const EdgeKernels kernels = compute_edge_kernels(models, graph, instance);
  const MarginalTable marginals = forward_marginals_kernels(graph, kernels);

  using DenseMap = std::unordered_map<std::int64_t, double>;

  // Free v_j once its last child has consumed it.
  std::vector<int> last_child(static_cast<std::size_t>(graph.n), -1);
  for (int k = 0; k < graph.n; ++k)
    for (const ParentEdge& e : graph.parents[static_cast<std::size_t>(k)])
      last_child[static_cast<std::size_t>(e.parent)] = k;

  std::vector<std::vector<DenseMap>> v(static_cast<std::size_t>(graph.n));
  SparseGradient total;

  for (int k = 0; k < graph.n; ++k) {
    auto& vk = v[static_cast<std::size_t>(k)];
    vk.resize(static_cast<std::size_t>(y));
    const auto& plist = graph.parents[static_cast<std::size_t>(k)];
    if (plist.empty()) {
      const EdgeConditionalGrad u = edge_conditional_grad(
          models.for_class(EdgeClass::local), layout, instance.node_preds[static_cast<std::size_t>(k)],
          instance.start_preds[static_cast<std::size_t>(k)], start_label);
      for (int yk = 0; yk < y; ++yk)
        for (const auto& [idx, val] : u.grads[static_cast<std::size_t>(yk)].sorted())
          vk[static_cast<std::size_t>(yk)][idx] += val;
    } else {
      const auto& alpha = graph.alphas[static_cast<std::size_t>(k)];
      for (std::size_t i = 0; i < plist.size(); ++i) {
        const int j = plist[i].parent;
        const auto& vj = v[static_cast<std::size_t>(j)];
        for (int yj = 0; yj < y; ++yj) {
          std::span<const double> row = kernels.cond_row(k, static_cast<int>(i), yj);
          // alpha * p(y_k | y_j) * v_j(y_j)
          for (const auto& [idx, val] : vj[static_cast<std::size_t>(yj)])
            for (int yk = 0; yk < y; ++yk) {
              const double coeff = alpha[i] * row[static_cast<std::size_t>(yk)];
              if (coeff != 0.0) vk[static_cast<std::size_t>(yk)][idx] += coeff * val;
            }
          // alpha * p(y_j | x) * u_kj(y_j, .)
          const EdgeConditionalGrad u = edge_conditional_grad(
              models.for_class(plist[i].cls), layout,
              instance.node_preds[static_cast<std::size_t>(k)],
              instance.edge_preds[static_cast<std::size_t>(k)][i], yj);
          const double pj = marginals.at(j, yj);
          for (int yk = 0; yk < y; ++yk)
            for (const auto& [idx, val] : u.grads[static_cast<std::size_t>(yk)].sorted())
              vk[static_cast<std::size_t>(yk)][idx] += alpha[i] * pj * val;
        }
      }
    }

    const int gold = instance.gold[static_cast<std::size_t>(k)];
    if (gold >= 0) {
      const double p = marginals.at(k, gold);
      if (p == 0.0) throw numeric_error("naive_marginal_gradient: zero marginal at gold label");
      for (const auto& [idx, val] : vk[static_cast<std::size_t>(gold)]) total.add(idx, val / p);
    }

    for (int j = 0; j <= k; ++j)
      if (last_child[static_cast<std::size_t>(j)] == k) {
        v[static_cast<std::size_t>(j)].clear();
        v[static_cast<std::size_t>(j)].shrink_to_fit();
      }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Synthetic long-range datasets. Token skeletons plant repeated capitalized
// group words; labels are sampled ancestrally over the induced skip graph:
// choose a parent by the planted mixing weights, copy its label with
// copy-strength probability, else draw uniformly. The planted mixture puts
// all of a repeat occurrence's mass on its skip parents, and filler runs
// restart after each occurrence, so a group's label evidence reaches the
// observable tokens only at its first occurrence (a cue token right before
// it). Chain models are information-starved at later occurrences; skip
// edges carry the signal.
// ---------------------------------------------------------------------------

struct SyntheticConfig {
  int num_sequences = 500;
  int min_length = 20;
  int max_length = 30;
  int num_labels = 3;
  int filler_vocab = 150;
  double cue_probability = 0.7;
  int groups_min = 1;
  int groups_max = 3;
  int occurrences_min = 2;
  int occurrences_max = 5;
  double copy_strength = 0.9;
  int recency_cap = kDefaultRecencyCap;
  std::uint64_t seed = 1;

  void validate() const {
    if (num_sequences < 1 || min_length < 2 || max_length < min_length || num_labels < 2 ||
        filler_vocab < 1 || groups_min < 0 || groups_max < groups_min || occurrences_min < 2 ||
        occurrences_max < occurrences_min || recency_cap < 1)
      throw usage_error("SyntheticConfig: invalid sizes");
    if (cue_probability < 0.0 || cue_probability > 1.0 || copy_strength < 0.0 ||
        copy_strength > 1.0)
      throw usage_error("SyntheticConfig: probabilities must lie in [0, 1]");
  }
};

struct SyntheticDataset {
  std::vector<Document> docs;
  LabelSet labels;
  // Sampler draw statistics against the planted parameters. Copy-rule draws
  // match the chosen parent with probability c + (1 - c) / |Y|.
  long copy_rule_draws = 0;
  long copy_rule_matches = 0;
  long uniform_rule_draws = 0;
  long uniform_rule_matches = 0;
};

inline std::string synthetic_label_name(int i) {
  if (i < 26) return std::string(1, static_cast<char>('A' + i));
  return "L" + std::to_string(i);
}

inline SyntheticDataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SyntheticDataset out;
  {
    std::vector<std::string> names;
    for (int i = 0; i < cfg.num_labels; ++i) names.push_back(synthetic_label_name(i));
    out.labels = LabelSet(std::move(names));
  }

  for (int s = 0; s < cfg.num_sequences; ++s) {
    const int len = cfg.min_length + rng.uniform_int(cfg.max_length - cfg.min_length + 1);
    const int groups = cfg.groups_min + rng.uniform_int(cfg.groups_max - cfg.groups_min + 1);

    // Plan group occurrence positions: distinct slots, at most half the
    // sequence, assigned to groups through a shuffled pool.
    std::vector<int> group_of(static_cast<std::size_t>(len), -1);
    std::vector<int> pool;
    for (int g = 0; g < groups; ++g) {
      const int occ =
          cfg.occurrences_min + rng.uniform_int(cfg.occurrences_max - cfg.occurrences_min + 1);
      for (int o = 0; o < occ; ++o) pool.push_back(g);
    }
    if (static_cast<int>(pool.size()) > len / 2) pool.resize(static_cast<std::size_t>(len / 2));
    rng.shuffle(pool);
    std::vector<int> slots = rng.permutation(len);
    slots.resize(pool.size());
    std::sort(slots.begin(), slots.end());
    for (std::size_t i = 0; i < pool.size(); ++i)
      group_of[static_cast<std::size_t>(slots[i])] = pool[i];

    std::vector<std::string> tokens(static_cast<std::size_t>(len));
    for (int k = 0; k < len; ++k) {
      const int g = group_of[static_cast<std::size_t>(k)];
      if (g >= 0)
        tokens[static_cast<std::size_t>(k)] = "Ent" + std::to_string(s) + "g" + std::to_string(g);
      else
        tokens[static_cast<std::size_t>(k)] = "pending";  // rewritten after labels are drawn
    }

    // Skip graph over the planted repeats (every group word has df 1).
    std::unordered_map<std::string, int> df;
    for (const std::string& t : tokens) df.emplace(t, 1);
    const ParentGraph graph = build_ner_skip_graph(tokens, df, kDefaultMaxDocFreq, cfg.recency_cap);

    // Ancestral labels. The planted mixing weights are uniform over a repeat
    // occurrence's skip parents (zero on its local edge) and put full mass
    // on the local edge elsewhere; a filler whose parent is an occurrence
    // draws fresh, so runs restart after each occurrence.
    std::vector<int> labels(static_cast<std::size_t>(len));
    for (int k = 0; k < len; ++k) {
      const auto& plist = graph.parents[static_cast<std::size_t>(k)];
      const bool is_occurrence = group_of[static_cast<std::size_t>(k)] >= 0;
      std::vector<int> candidates;
      for (std::size_t i = 0; i < plist.size(); ++i)
        if (!is_occurrence || plist[i].cls == EdgeClass::skip)
          candidates.push_back(static_cast<int>(i));
      if (candidates.empty()) {
        labels[static_cast<std::size_t>(k)] = rng.uniform_int(cfg.num_labels);
        continue;
      }
      const int pick =
          candidates[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(candidates.size())))];
      const int parent = plist[static_cast<std::size_t>(pick)].parent;
      const int parent_label = labels[static_cast<std::size_t>(parent)];
      const bool parent_is_occurrence = group_of[static_cast<std::size_t>(parent)] >= 0;
      const bool copy_rule = is_occurrence || !parent_is_occurrence;
      int drawn;
      if (copy_rule && rng.uniform01() < cfg.copy_strength)
        drawn = parent_label;
      else
        drawn = rng.uniform_int(cfg.num_labels);
      labels[static_cast<std::size_t>(k)] = drawn;
      if (copy_rule) {
        ++out.copy_rule_draws;
        if (drawn == parent_label) ++out.copy_rule_matches;
      } else {
        ++out.uniform_rule_draws;
        if (drawn == parent_label) ++out.uniform_rule_matches;
      }
    }

    // Emissions: fillers reveal their own label with cue_probability; the
    // filler right before a group's first occurrence instead carries that
    // occurrence's label cue (the group's only observable label evidence).
    for (int k = 0; k < len; ++k) {
      if (group_of[static_cast<std::size_t>(k)] >= 0) continue;
      if (rng.uniform01() < cfg.cue_probability)
        tokens[static_cast<std::size_t>(k)] =
            "cue" + synthetic_label_name(labels[static_cast<std::size_t>(k)]);
      else
        tokens[static_cast<std::size_t>(k)] = "n" + std::to_string(rng.uniform_int(cfg.filler_vocab));
    }
    std::vector<int> first_of(static_cast<std::size_t>(groups), -1);
    for (int k = 0; k < len; ++k) {
      const int g = group_of[static_cast<std::size_t>(k)];
      if (g >= 0 && first_of[static_cast<std::size_t>(g)] < 0)
        first_of[static_cast<std::size_t>(g)] = k;
    }
    for (int g = 0; g < groups; ++g) {
      const int first = first_of[static_cast<std::size_t>(g)];
      if (first < 1) continue;
      const int cue_slot = first - 1;
      if (group_of[static_cast<std::size_t>(cue_slot)] >= 0) continue;
      tokens[static_cast<std::size_t>(cue_slot)] =
          "mcue" + synthetic_label_name(labels[static_cast<std::size_t>(first)]);
    }

    Document doc;
    doc.num_sentences = 1;
    for (int k = 0; k < len; ++k) {
      Token tok;
      tok.word = tokens[static_cast<std::size_t>(k)];
      tok.tag = out.labels.name(labels[static_cast<std::size_t>(k)]);
      tok.sentence = 0;
      doc.tokens.push_back(std::move(tok));
    }
    out.docs.push_back(std::move(doc));
  }
  return out;
}

}  // namespace mopmemm
