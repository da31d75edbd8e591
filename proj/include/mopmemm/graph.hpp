// Parent-DAG structures and the two skip-edge construction procedures:
// NER skip chains over repeated capitalized words, and hyperlink DAGs
// built from a random page ordering.
#pragma once

#include <cctype>
#include <functional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "mopmemm/core.hpp"
#include "mopmemm/model.hpp"

namespace mopmemm {

// Default skip-edge constants: df cutoff 100, at most the 5 most recent
// earlier occurrences of a word.
inline constexpr int kDefaultMaxDocFreq = 100;
inline constexpr int kDefaultRecencyCap = 5;

struct ParentEdge {
  int parent;
  EdgeClass cls;
};

// Per-node parent lists with mixing weights. Parents always precede their
// children in index order, so the graph is acyclic by construction.
struct ParentGraph {
  int n = 0;
  std::vector<std::vector<ParentEdge>> parents;  // parents[k], k in [0, n)
  std::vector<std::vector<double>> alphas;       // aligned with parents[k]

  int num_edges() const {
    int total = 0;
    for (const auto& p : parents) total += static_cast<int>(p.size());
    return total;
  }

  void validate() const {
    if (static_cast<int>(parents.size()) != n || static_cast<int>(alphas.size()) != n)
      throw structural_error("ParentGraph: ragged parent/alpha lists");
    for (int k = 0; k < n; ++k) {
      const auto& plist = parents[static_cast<std::size_t>(k)];
      const auto& alist = alphas[static_cast<std::size_t>(k)];
      if (plist.size() != alist.size())
        throw structural_error("ParentGraph: alpha list misaligned at node " + std::to_string(k));
      std::set<std::pair<int, int>> seen;
      double sum = 0.0;
      for (std::size_t i = 0; i < plist.size(); ++i) {
        if (plist[i].parent < 0 || plist[i].parent >= k)
          throw structural_error("ParentGraph: parent index not earlier than node " +
                                 std::to_string(k));
        if (!seen.emplace(plist[i].parent, static_cast<int>(plist[i].cls)).second)
          throw structural_error("ParentGraph: duplicate (parent, class) at node " +
                                 std::to_string(k));
        if (alist[i] < 0.0) throw structural_error("ParentGraph: negative mixing weight");
        sum += alist[i];
      }
      if (!plist.empty() && std::abs(sum - 1.0) > 1e-12)
        throw structural_error("ParentGraph: mixing weights do not sum to 1 at node " +
                               std::to_string(k));
    }
  }
};

// alpha_kj = 1 / |pi_k| on every node with parents.
inline ParentGraph uniform_alphas(ParentGraph graph) {
  for (int k = 0; k < graph.n; ++k) {
    const std::size_t p = graph.parents[static_cast<std::size_t>(k)].size();
    graph.alphas[static_cast<std::size_t>(k)].assign(p, p == 0 ? 0.0 : 1.0 / static_cast<double>(p));
  }
  return graph;
}

// First-order chain: node k > 0 has the single local parent k - 1.
inline ParentGraph build_chain(int n) {
  if (n < 1) throw structural_error("build_chain: empty instance");
  ParentGraph g;
  g.n = n;
  g.parents.resize(static_cast<std::size_t>(n));
  g.alphas.resize(static_cast<std::size_t>(n));
  for (int k = 1; k < n; ++k) {
    g.parents[static_cast<std::size_t>(k)].push_back({k - 1, EdgeClass::local});
    g.alphas[static_cast<std::size_t>(k)].push_back(1.0);
  }
  return g;
}

// Default capitalization test: first character is an uppercase ASCII letter.
// Callers may substitute their own predicate.
inline bool default_is_capitalized(const std::string& word) {
  return !word.empty() && std::isupper(static_cast<unsigned char>(word[0])) != 0;
}

using CapitalizationPredicate = std::function<bool(const std::string&)>;

// Chain plus skip edges between identical capitalized words within the
// document. Words seen in more than max_df documents contribute no skip
// edges; each occurrence connects back to at most the r most recent earlier
// occurrences of the same surface form.
inline ParentGraph build_ner_skip_graph(const std::vector<std::string>& tokens,
                                        const std::unordered_map<std::string, int>& doc_freq,
                                        int max_df = kDefaultMaxDocFreq,
                                        int recency_cap = kDefaultRecencyCap,
                                        const CapitalizationPredicate& is_capitalized =
                                            default_is_capitalized) {
  if (tokens.empty()) throw structural_error("build_ner_skip_graph: empty token sequence");
  if (max_df < 0) throw structural_error("build_ner_skip_graph: max_df must be >= 0");
  if (recency_cap < 1) throw structural_error("build_ner_skip_graph: recency cap must be >= 1");

  ParentGraph g = build_chain(static_cast<int>(tokens.size()));
  std::unordered_map<std::string, std::vector<int>> occurrences;
  for (int k = 0; k < g.n; ++k) {
    const std::string& word = tokens[static_cast<std::size_t>(k)];
    if (!is_capitalized(word)) continue;
    auto df = doc_freq.find(word);
    if (df != doc_freq.end() && df->second > max_df) continue;
    std::vector<int>& earlier = occurrences[word];
    const int available = static_cast<int>(earlier.size());
    const int take = std::min(recency_cap, available);
    // Most recent earlier occurrences, appended in increasing position order.
    for (int i = available - take; i < available; ++i)
      g.parents[static_cast<std::size_t>(k)].push_back({earlier[static_cast<std::size_t>(i)],
                                                        EdgeClass::skip});
    earlier.push_back(k);
  }
  return uniform_alphas(std::move(g));
}

// ---------------------------------------------------------------------------
// Hyperlink graphs.
// ---------------------------------------------------------------------------

struct Arc {
  int source;
  int target;
};

// Directed hyperlinks between pages. Self-loops are rejected; duplicate
// arcs collapse to one.
class LinkGraph {
 public:
  LinkGraph() = default;
  explicit LinkGraph(int num_pages) : num_pages_(num_pages) {}

  int num_pages() const { return num_pages_; }

  // Returns false when the arc was already present.
  bool add_arc(int source, int target) {
    if (source < 0 || source >= num_pages_ || target < 0 || target >= num_pages_)
      throw structural_error("LinkGraph: arc endpoint out of range");
    if (source == target) throw structural_error("LinkGraph: self-loop rejected");
    if (!arc_set_.emplace(source, target).second) return false;
    arcs_.push_back({source, target});
    return true;
  }

  bool has_arc(int source, int target) const { return arc_set_.count({source, target}) > 0; }

  const std::vector<Arc>& arcs() const { return arcs_; }

 private:
  int num_pages_ = 0;
  std::vector<Arc> arcs_;
  std::set<std::pair<int, int>> arc_set_;
};

// Orders pages by the given permutation and turns every hyperlink into a
// model edge from the earlier position to the later one. A hyperlink that
// points forward in the ordering uses the incoming edge model, otherwise
// the outgoing one. Node k of the result is the page permutation[k].
inline ParentGraph build_link_dag(const LinkGraph& links, const std::vector<int>& permutation) {
  const int n = links.num_pages();
  if (static_cast<int>(permutation.size()) != n)
    throw structural_error("build_link_dag: permutation size mismatch");
  std::vector<int> position(static_cast<std::size_t>(n), -1);
  for (int pos = 0; pos < n; ++pos) {
    const int page = permutation[static_cast<std::size_t>(pos)];
    if (page < 0 || page >= n || position[static_cast<std::size_t>(page)] != -1)
      throw structural_error("build_link_dag: permutation is not a bijection");
    position[static_cast<std::size_t>(page)] = pos;
  }

  ParentGraph g;
  g.n = n;
  g.parents.resize(static_cast<std::size_t>(n));
  g.alphas.resize(static_cast<std::size_t>(n));
  for (const Arc& arc : links.arcs()) {
    const int ps = position[static_cast<std::size_t>(arc.source)];
    const int pt = position[static_cast<std::size_t>(arc.target)];
    const int earlier = std::min(ps, pt);
    const int later = std::max(ps, pt);
    // Hyperlink pointing from the earlier page to the later one -> incoming.
    const EdgeClass cls = (ps == earlier) ? EdgeClass::incoming : EdgeClass::outgoing;
    g.parents[static_cast<std::size_t>(later)].push_back({earlier, cls});
  }
  // Canonical parent order: by (parent index, class).
  for (auto& plist : g.parents)
    std::sort(plist.begin(), plist.end(), [](const ParentEdge& a, const ParentEdge& b) {
      return a.parent != b.parent ? a.parent < b.parent
                                  : static_cast<int>(a.cls) < static_cast<int>(b.cls);
    });
  return uniform_alphas(std::move(g));
}

}  // namespace mopmemm
