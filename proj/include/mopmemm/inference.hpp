// Exact posterior node marginals for mixture-of-parents models: one forward
// sweep in node order, mixing each parent's predictive distribution. Also
// posterior decoding, chain Viterbi, and ordering-averaged prediction for
// hyperlink graphs.
#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "mopmemm/core.hpp"
#include "mopmemm/features.hpp"
#include "mopmemm/graph.hpp"
#include "mopmemm/model.hpp"

namespace mopmemm {

// ---------------------------------------------------------------------------
// MarginalTable: n x |Y| row-stochastic matrix, row k = p(y_k | x).
// Marginals are stored in linear space; mixtures are convex combinations,
// so rows cannot underflow no matter how long the instance is.
// ---------------------------------------------------------------------------

struct MarginalTable {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major

  MarginalTable() = default;
  MarginalTable(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  std::span<double> row(int k) {
    return {data.data() + static_cast<std::size_t>(k) * cols, static_cast<std::size_t>(cols)};
  }
  std::span<const double> row(int k) const {
    return {data.data() + static_cast<std::size_t>(k) * cols, static_cast<std::size_t>(cols)};
  }

  double at(int k, int y) const { return data[static_cast<std::size_t>(k) * cols + y]; }

  void validate(double tol = 1e-10) const {
    for (int k = 0; k < rows; ++k) {
      double sum = 0.0;
      for (double p : row(k)) {
        if (!(p >= 0.0) || p > 1.0 + tol)
          throw numeric_error("MarginalTable: entry outside [0, 1]");
        sum += p;
      }
      if (std::abs(sum - 1.0) > tol) throw numeric_error("MarginalTable: row does not sum to 1");
    }
  }

  double max_abs_diff(const MarginalTable& other) const {
    if (rows != other.rows || cols != other.cols)
      throw structural_error("MarginalTable: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) m = std::max(m, std::abs(data[i] - other.data[i]));
    return m;
  }
};

// ---------------------------------------------------------------------------
// EdgeKernels: the per-edge conditional tables p(y_k | y_j, x) an instance
// induces, plus the START vector of every parentless node. Everything
// downstream (forward sweep, brute force, both objectives) consumes these,
// so all routes share one scoring path.
// ---------------------------------------------------------------------------

struct EdgeKernels {
  int num_labels = 0;
  // start[k]: p(y_k | START); sized |Y|, only for parentless nodes.
  std::vector<std::vector<double>> start;
  // cond[k][i]: row-major |Y| x |Y| table for edge i into node k; row = parent label.
  std::vector<std::vector<std::vector<double>>> cond;

  std::span<const double> cond_row(int k, int i, int parent_label) const {
    const auto& table = cond[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
    return {table.data() + static_cast<std::size_t>(parent_label) * num_labels,
            static_cast<std::size_t>(num_labels)};
  }
};

inline EdgeKernels compute_edge_kernels(const ModelSet& models, const ParentGraph& graph,
                                        const FeaturizedInstance& instance) {
  instance.validate_alignment(graph);
  const int y = models.labels().size();
  const int start_label = models.labels().start_index();
  EdgeKernels kernels;
  kernels.num_labels = y;
  kernels.start.resize(static_cast<std::size_t>(graph.n));
  kernels.cond.resize(static_cast<std::size_t>(graph.n));
  for (int k = 0; k < graph.n; ++k) {
    const auto& plist = graph.parents[static_cast<std::size_t>(k)];
    if (plist.empty()) {
      Distribution d = edge_conditional(models.for_class(EdgeClass::local),
                                        instance.node_preds[static_cast<std::size_t>(k)],
                                        instance.start_preds[static_cast<std::size_t>(k)],
                                        start_label);
      kernels.start[static_cast<std::size_t>(k)] = std::move(d.probs);
      continue;
    }
    auto& tables = kernels.cond[static_cast<std::size_t>(k)];
    tables.resize(plist.size());
    for (std::size_t i = 0; i < plist.size(); ++i) {
      const EdgeClassModel& model = models.for_class(plist[i].cls);
      const PredicateVector& pair_preds = instance.edge_preds[static_cast<std::size_t>(k)][i];
      auto& table = tables[i];
      table.resize(static_cast<std::size_t>(y) * static_cast<std::size_t>(y));
      for (int parent = 0; parent < y; ++parent) {
        std::span<double> row{table.data() + static_cast<std::size_t>(parent) * y,
                              static_cast<std::size_t>(y)};
        score_children(model, instance.node_preds[static_cast<std::size_t>(k)], pair_preds, parent,
                       row);
        softmax_in_place(row);
      }
    }
  }
  return kernels;
}

// ---------------------------------------------------------------------------
// Forward sweep: p(y_k) = sum_{j in pi_k} alpha_kj sum_{y_j} p(y_k|y_j) p(y_j).
// ---------------------------------------------------------------------------

inline MarginalTable forward_marginals_kernels(const ParentGraph& graph,
                                               const EdgeKernels& kernels) {
  const int y = kernels.num_labels;
  MarginalTable marg(graph.n, y);
  for (int k = 0; k < graph.n; ++k) {
    std::span<double> out = marg.row(k);
    const auto& plist = graph.parents[static_cast<std::size_t>(k)];
    if (plist.empty()) {
      const auto& start = kernels.start[static_cast<std::size_t>(k)];
      std::copy(start.begin(), start.end(), out.begin());
      continue;
    }
    const auto& alpha = graph.alphas[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < plist.size(); ++i) {
      std::span<const double> parent_marg = marg.row(plist[i].parent);
      for (int yj = 0; yj < y; ++yj) {
        const double weight = alpha[i] * parent_marg[static_cast<std::size_t>(yj)];
        if (weight == 0.0) continue;
        std::span<const double> row = kernels.cond_row(k, static_cast<int>(i), yj);
        for (int yk = 0; yk < y; ++yk) out[static_cast<std::size_t>(yk)] += weight * row[static_cast<std::size_t>(yk)];
      }
    }
  }
  return marg;
}

inline MarginalTable forward_marginals(const ModelSet& models, const ParentGraph& graph,
                                       const FeaturizedInstance& instance) {
  return forward_marginals_kernels(graph, compute_edge_kernels(models, graph, instance));
}

// Per-node argmax; ties resolve to the lowest label index.
inline std::vector<int> posterior_decode(const MarginalTable& marginals) {
  std::vector<int> out(static_cast<std::size_t>(marginals.rows));
  for (int k = 0; k < marginals.rows; ++k) {
    std::span<const double> row = marginals.row(k);
    int best = 0;
    for (int y = 1; y < marginals.cols; ++y)
      if (row[static_cast<std::size_t>(y)] > row[static_cast<std::size_t>(best)]) best = y;
    out[static_cast<std::size_t>(k)] = best;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chain Viterbi: exact joint MAP by max-product in log space. Only defined
// for pure chains; the mixture trick does not extend to posterior modes, so
// skip graphs are rejected.
// ---------------------------------------------------------------------------

inline std::vector<int> viterbi_chain(const ModelSet& models, const FeaturizedInstance& instance) {
  const ParentGraph& graph = instance.graph;
  for (int k = 0; k < graph.n; ++k) {
    const auto& plist = graph.parents[static_cast<std::size_t>(k)];
    const bool chain_node =
        (k == 0 && plist.empty()) ||
        (k > 0 && plist.size() == 1 && plist[0].parent == k - 1 && plist[0].cls == EdgeClass::local);
    if (!chain_node)
      throw unsupported_error("viterbi_chain: graph has skip edges; joint MAP is unsupported");
  }
  const int y = models.labels().size();
  const EdgeClassModel& local = models.for_class(EdgeClass::local);
  std::vector<double> score(static_cast<std::size_t>(y));
  std::vector<std::vector<int>> backptr(static_cast<std::size_t>(graph.n),
                                        std::vector<int>(static_cast<std::size_t>(y), 0));
  {
    std::vector<double> start = edge_log_conditional(local, instance.node_preds[0],
                                                     instance.start_preds[0],
                                                     models.labels().start_index());
    score = std::move(start);
  }
  std::vector<double> next(static_cast<std::size_t>(y));
  for (int k = 1; k < graph.n; ++k) {
    std::fill(next.begin(), next.end(), -std::numeric_limits<double>::infinity());
    for (int prev = 0; prev < y; ++prev) {
      const std::vector<double> logp =
          edge_log_conditional(local, instance.node_preds[static_cast<std::size_t>(k)],
                               instance.edge_preds[static_cast<std::size_t>(k)][0], prev);
      for (int cur = 0; cur < y; ++cur) {
        const double cand = score[static_cast<std::size_t>(prev)] + logp[static_cast<std::size_t>(cur)];
        // Strict improvement keeps the lowest previous label on ties.
        if (cand > next[static_cast<std::size_t>(cur)]) {
          next[static_cast<std::size_t>(cur)] = cand;
          backptr[static_cast<std::size_t>(k)][static_cast<std::size_t>(cur)] = prev;
        }
      }
    }
    score = next;
  }
  int best = 0;
  for (int c = 1; c < y; ++c)
    if (score[static_cast<std::size_t>(c)] > score[static_cast<std::size_t>(best)]) best = c;
  std::vector<int> path(static_cast<std::size_t>(graph.n));
  path[static_cast<std::size_t>(graph.n - 1)] = best;
  for (int k = graph.n - 1; k > 0; --k)
    path[static_cast<std::size_t>(k - 1)] =
        backptr[static_cast<std::size_t>(k)][static_cast<std::size_t>(path[static_cast<std::size_t>(k)])];
  return path;
}

// ---------------------------------------------------------------------------
// Ordering-averaged prediction for hyperlink graphs. Rows of the result are
// indexed by page (original order), not permutation position.
// ---------------------------------------------------------------------------

inline MarginalTable averaged_marginals_over(const ModelSet& models,
                                             const PageCollection& collection,
                                             const std::vector<std::vector<int>>& permutations,
                                             const Featurizer& fx, Vocabularies& vocabs) {
  if (permutations.empty())
    throw structural_error("averaged_marginals: need at least one ordering");
  const int n = collection.links.num_pages();
  const int y = models.labels().size();
  MarginalTable mean(n, y);
  for (const std::vector<int>& perm : permutations) {
    const FeaturizedInstance inst = featurize_pages(collection, perm, fx, vocabs, nullptr);
    const MarginalTable marg = forward_marginals(models, inst.graph, inst);
    for (int k = 0; k < n; ++k) {
      const int page = perm[static_cast<std::size_t>(k)];
      std::span<double> dst = mean.row(page);
      std::span<const double> src = marg.row(k);
      for (int c = 0; c < y; ++c) dst[static_cast<std::size_t>(c)] += src[static_cast<std::size_t>(c)];
    }
  }
  const double inv = 1.0 / static_cast<double>(permutations.size());
  for (double& v : mean.data) v *= inv;
  mean.validate(1e-10);
  return mean;
}

inline std::vector<std::vector<int>> sample_permutations(int n, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<int>> perms;
  perms.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) perms.push_back(rng.permutation(n));
  return perms;
}

inline MarginalTable averaged_marginals(const ModelSet& models, const PageCollection& collection,
                                        int num_orderings, std::uint64_t seed, const Featurizer& fx,
                                        Vocabularies& vocabs) {
  if (num_orderings < 1) throw structural_error("averaged_marginals: num_orderings must be >= 1");
  return averaged_marginals_over(
      models, collection, sample_permutations(collection.links.num_pages(), num_orderings, seed),
      fx, vocabs);
}

}  // namespace mopmemm
