// Predicate extraction. Templates are data: a list of template strings
// applied per position, so the exact feature set is configuration, not code.
// Skip-edge predicates are the union of the two endpoints' local-edge
// predicates, tagged with the endpoint that produced them.
#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mopmemm/core.hpp"
#include "mopmemm/graph.hpp"
#include "mopmemm/model.hpp"

namespace mopmemm {

// ---------------------------------------------------------------------------
// Vocabulary: predicate string -> id, assigned in first-encounter order.
// Once frozen, unknown strings map to the sentinel -1 and are dropped
// downstream; the map never grows again.
// ---------------------------------------------------------------------------

class Vocabulary {
 public:
  static constexpr std::int32_t kUnknown = -1;

  std::int32_t intern(const std::string& predicate) {
    auto it = map_.find(predicate);
    if (it != map_.end()) return it->second;
    if (frozen_) return kUnknown;
    const auto id = static_cast<std::int32_t>(names_.size());
    names_.push_back(predicate);
    map_.emplace(predicate, id);
    return id;
  }

  std::int32_t lookup(const std::string& predicate) const {
    auto it = map_.find(predicate);
    return it == map_.end() ? kUnknown : it->second;
  }

  const std::string& name(std::int32_t id) const {
    if (id < 0 || id >= size()) throw structural_error("Vocabulary: id out of range");
    return names_[static_cast<std::size_t>(id)];
  }

  std::int32_t size() const { return static_cast<std::int32_t>(names_.size()); }
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::unordered_map<std::string, std::int32_t> map_;
  std::vector<std::string> names_;
  bool frozen_ = false;
};

struct Vocabularies {
  Vocabulary node;  // inputs to g_t
  Vocabulary pair;  // inputs to f_s

  void freeze() {
    node.freeze();
    pair.freeze();
  }
};

// ---------------------------------------------------------------------------
// Tokens and documents (sequence task). Sentence ids bound feature windows;
// the chain itself runs across the whole document.
// ---------------------------------------------------------------------------

struct Token {
  std::string word;
  std::vector<std::string> extras;  // columns between the word and the tag
  std::string tag;
  int sentence = 0;
};

struct Document {
  std::vector<Token> tokens;
  int num_sentences = 0;
};

// Pages (linked-document task).
struct Page {
  std::string id;
  std::string label;
  std::vector<std::string> tokens;
};

struct PageCollection {
  std::vector<Page> pages;
  LinkGraph links;
};

// ---------------------------------------------------------------------------
// Template configuration.
// ---------------------------------------------------------------------------

struct TemplateConfig {
  std::vector<std::string> node_templates;
  std::vector<std::string> edge_templates;
  // Tag skip-edge predicates with the endpoint (j:/k:) that produced them.
  bool tag_skip_endpoints = true;
  // Treat sentence boundaries as window boundaries for offset lookups.
  bool sentence_windows = true;
  // Lowercase page tokens before forming bag-of-words predicates.
  bool lowercase_bow = true;

  static TemplateConfig ner_default() {
    TemplateConfig cfg;
    cfg.node_templates = {"bias",  "w:-2",  "w:-1", "w:0",  "w:1",   "w:2",   "lw:0",
                          "sh:-1", "sh:0",  "sh:1", "pre:1", "pre:2", "pre:3", "pre:4",
                          "suf:1", "suf:2", "suf:3", "suf:4", "cap:0", "dig:0", "punc:0"};
    cfg.edge_templates = {"bias", "w:-1", "w:0", "lw:0", "sh:-1", "sh:0", "cap:-1", "cap:0"};
    return cfg;
  }

  static TemplateConfig linked_docs_default() {
    TemplateConfig cfg;
    cfg.node_templates = {"bias"};
    cfg.edge_templates = {"bias"};
    return cfg;
  }

  bool operator==(const TemplateConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Featurizer: compiles the template strings once, then produces predicate
// strings and interned PredicateVectors. Extraction is a pure function of
// (input, position, templates).
// ---------------------------------------------------------------------------

class Featurizer {
 public:
  explicit Featurizer(TemplateConfig cfg) : cfg_(std::move(cfg)) {
    for (const std::string& t : cfg_.node_templates) node_compiled_.push_back(compile(t));
    for (const std::string& t : cfg_.edge_templates) edge_compiled_.push_back(compile(t));
  }

  const TemplateConfig& config() const { return cfg_; }

  std::vector<std::string> node_strings(const Document& doc, int k) const {
    return apply(node_compiled_, doc, k);
  }

  // Predicates of the local edge entering position k (also the START-edge
  // predicates when k has no parents).
  std::vector<std::string> local_edge_strings(const Document& doc, int k) const {
    return apply(edge_compiled_, doc, k);
  }

  std::vector<std::string> skip_edge_strings(const Document& doc, int j, int k) const {
    return join_endpoint_strings(local_edge_strings(doc, j), local_edge_strings(doc, k));
  }

  // Bag-of-words predicates for a page, count-capped at one.
  std::vector<std::string> page_strings(const Page& page) const {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const std::string& tok : page.tokens) {
      std::string w = tok;
      if (cfg_.lowercase_bow)
        for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      std::string pred = "bow=" + w;
      if (seen.insert(pred).second) out.push_back(std::move(pred));
    }
    for (const auto& t : node_compiled_)
      if (t.kind == Kind::Bias) {
        out.push_back("b");
        break;
      }
    return out;
  }

  std::vector<std::string> link_edge_strings(const Page& parent, const Page& child) const {
    return join_endpoint_strings(page_strings(parent), page_strings(child));
  }

  // Union of the two endpoints' local predicates. Tagged mode keeps both
  // endpoint copies apart; untagged mode is a plain set union.
  std::vector<std::string> join_endpoint_strings(const std::vector<std::string>& at_parent,
                                                 const std::vector<std::string>& at_child) const {
    std::vector<std::string> out;
    if (cfg_.tag_skip_endpoints) {
      out.reserve(at_parent.size() + at_child.size());
      for (const std::string& s : at_parent) out.push_back("j:" + s);
      for (const std::string& s : at_child) out.push_back("k:" + s);
    } else {
      std::unordered_set<std::string> seen;
      for (const std::string& s : at_parent)
        if (seen.insert(s).second) out.push_back(s);
      for (const std::string& s : at_child)
        if (seen.insert(s).second) out.push_back(s);
    }
    return out;
  }

  static PredicateVector intern(const std::vector<std::string>& strings, Vocabulary& vocab) {
    std::vector<PredEntry> entries;
    entries.reserve(strings.size());
    for (const std::string& s : strings) entries.push_back({vocab.intern(s), 1.0});
    return PredicateVector::from_entries(std::move(entries));
  }

 private:
  enum class Kind { Bias, Word, Lower, Shape, Prefix, Suffix, Cap, Digit, Punct, Col };
  struct Compiled {
    Kind kind;
    int a = 0;
    int b = 0;
  };

  static Compiled compile(const std::string& spec) {
    auto split = [](const std::string& s) {
      std::vector<std::string> parts;
      std::size_t pos = 0;
      while (true) {
        std::size_t colon = s.find(':', pos);
        if (colon == std::string::npos) {
          parts.push_back(s.substr(pos));
          break;
        }
        parts.push_back(s.substr(pos, colon - pos));
        pos = colon + 1;
      }
      return parts;
    };
    const std::vector<std::string> parts = split(spec);
    auto arg = [&](std::size_t i) {
      if (i >= parts.size()) throw format_error("template '" + spec + "': missing argument");
      try {
        return std::stoi(parts[i]);
      } catch (const std::exception&) {
        throw format_error("template '" + spec + "': bad integer argument");
      }
    };
    const std::string& head = parts[0];
    if (head == "bias") return {Kind::Bias};
    if (head == "w") return {Kind::Word, arg(1)};
    if (head == "lw") return {Kind::Lower, arg(1)};
    if (head == "sh") return {Kind::Shape, arg(1)};
    if (head == "pre") return {Kind::Prefix, arg(1)};
    if (head == "suf") return {Kind::Suffix, arg(1)};
    if (head == "cap") return {Kind::Cap, arg(1)};
    if (head == "dig") return {Kind::Digit, arg(1)};
    if (head == "punc") return {Kind::Punct, arg(1)};
    if (head == "col") return {Kind::Col, arg(1), arg(2)};
    throw format_error("unknown template '" + spec + "'");
  }

  std::optional<const Token*> token_at(const Document& doc, int k, int off) const {
    const int idx = k + off;
    if (idx < 0 || idx >= static_cast<int>(doc.tokens.size())) return std::nullopt;
    if (cfg_.sentence_windows &&
        doc.tokens[static_cast<std::size_t>(idx)].sentence !=
            doc.tokens[static_cast<std::size_t>(k)].sentence)
      return std::nullopt;
    return &doc.tokens[static_cast<std::size_t>(idx)];
  }

  std::string word_at(const Document& doc, int k, int off) const {
    auto tok = token_at(doc, k, off);
    if (!tok) return off < 0 ? "__BOS__" : (off > 0 ? "__EOS__" : "__NONE__");
    return (*tok)->word;
  }

  static std::string shape_of(const std::string& word) {
    std::string shape;
    shape.reserve(word.size());
    for (char raw : word) {
      const auto c = static_cast<unsigned char>(raw);
      if (c > 127)
        shape.push_back('u');
      else if (std::isupper(c))
        shape.push_back('X');
      else if (std::islower(c))
        shape.push_back('x');
      else if (std::isdigit(c))
        shape.push_back('d');
      else
        shape.push_back(raw);
    }
    return shape;
  }

  std::vector<std::string> apply(const std::vector<Compiled>& templates, const Document& doc,
                                 int k) const {
    if (k < 0 || k >= static_cast<int>(doc.tokens.size()))
      throw structural_error("feature extraction: position out of range");
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    auto emit = [&](std::string s) {
      if (seen.insert(s).second) out.push_back(std::move(s));
    };
    const std::string& w0 = doc.tokens[static_cast<std::size_t>(k)].word;
    for (const Compiled& t : templates) {
      switch (t.kind) {
        case Kind::Bias:
          emit("b");
          break;
        case Kind::Word:
          emit("w[" + std::to_string(t.a) + "]=" + word_at(doc, k, t.a));
          break;
        case Kind::Lower: {
          std::string w = word_at(doc, k, t.a);
          for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
          emit("lw[" + std::to_string(t.a) + "]=" + w);
          break;
        }
        case Kind::Shape:
          emit("sh[" + std::to_string(t.a) + "]=" + shape_of(word_at(doc, k, t.a)));
          break;
        case Kind::Prefix:
          if (static_cast<int>(w0.size()) >= t.a)
            emit("pre" + std::to_string(t.a) + "=" + w0.substr(0, static_cast<std::size_t>(t.a)));
          break;
        case Kind::Suffix:
          if (static_cast<int>(w0.size()) >= t.a)
            emit("suf" + std::to_string(t.a) + "=" +
                 w0.substr(w0.size() - static_cast<std::size_t>(t.a)));
          break;
        case Kind::Cap: {
          const std::string w = word_at(doc, k, t.a);
          if (default_is_capitalized(w)) emit("cap[" + std::to_string(t.a) + "]");
          break;
        }
        case Kind::Digit: {
          const std::string w = word_at(doc, k, t.a);
          bool any = false;
          for (char c : w) any = any || std::isdigit(static_cast<unsigned char>(c)) != 0;
          if (any) emit("dig[" + std::to_string(t.a) + "]");
          break;
        }
        case Kind::Punct: {
          const std::string w = word_at(doc, k, t.a);
          bool all = !w.empty();
          for (char c : w) all = all && std::ispunct(static_cast<unsigned char>(c)) != 0;
          if (all) emit("punc[" + std::to_string(t.a) + "]");
          break;
        }
        case Kind::Col: {
          auto tok = token_at(doc, k, t.b);
          std::string v = "__NONE__";
          if (tok && t.a >= 0 && t.a < static_cast<int>((*tok)->extras.size()))
            v = (*tok)->extras[static_cast<std::size_t>(t.a)];
          emit("c" + std::to_string(t.a) + "[" + std::to_string(t.b) + "]=" + v);
          break;
        }
      }
    }
    return out;
  }

  TemplateConfig cfg_;
  std::vector<Compiled> node_compiled_;
  std::vector<Compiled> edge_compiled_;
};

// Spec-level extraction entry points.
inline PredicateVector extract_node_predicates(const Document& doc, int k, const Featurizer& fx,
                                               Vocabulary& vocab) {
  return Featurizer::intern(fx.node_strings(doc, k), vocab);
}

inline PredicateVector extract_skip_edge_predicates(const Document& doc, int j, int k,
                                                    const Featurizer& fx, Vocabulary& vocab) {
  return Featurizer::intern(fx.skip_edge_strings(doc, j, k), vocab);
}

// ---------------------------------------------------------------------------
// FeaturizedInstance: the graph plus aligned predicate vectors and gold
// labels. start_preds[k] backs the START convention for parentless nodes.
// ---------------------------------------------------------------------------

struct FeaturizedInstance {
  ParentGraph graph;
  std::vector<PredicateVector> node_preds;
  std::vector<PredicateVector> start_preds;
  std::vector<std::vector<PredicateVector>> edge_preds;  // aligned with graph.parents
  std::vector<int> gold;                                 // -1 when unlabeled

  void validate_alignment(const ParentGraph& g) const {
    if (g.n != graph.n || static_cast<int>(node_preds.size()) != g.n ||
        static_cast<int>(start_preds.size()) != g.n || static_cast<int>(edge_preds.size()) != g.n)
      throw structural_error("FeaturizedInstance: graph/instance mismatch");
    for (int k = 0; k < g.n; ++k)
      if (edge_preds[static_cast<std::size_t>(k)].size() !=
          g.parents[static_cast<std::size_t>(k)].size())
        throw structural_error("FeaturizedInstance: edge predicates misaligned at node " +
                               std::to_string(k));
  }
};

// ---------------------------------------------------------------------------
// Corpus-level helpers.
// ---------------------------------------------------------------------------

inline std::unordered_map<std::string, int> count_document_frequencies(
    const std::vector<Document>& docs) {
  std::unordered_map<std::string, int> df;
  for (const Document& doc : docs) {
    std::unordered_set<std::string> seen;
    for (const Token& tok : doc.tokens)
      if (seen.insert(tok.word).second) ++df[tok.word];
  }
  return df;
}

inline LabelSet build_label_set(const std::vector<Document>& docs) {
  std::vector<std::string> names;
  std::unordered_set<std::string> seen;
  for (const Document& doc : docs)
    for (const Token& tok : doc.tokens)
      if (seen.insert(tok.tag).second) names.push_back(tok.tag);
  if (names.empty()) throw data_error("build_label_set: corpus has no labeled tokens");
  return LabelSet(std::move(names));
}

inline LabelSet build_label_set(const PageCollection& pages) {
  std::vector<std::string> names;
  std::unordered_set<std::string> seen;
  for (const Page& p : pages.pages)
    if (seen.insert(p.label).second) names.push_back(p.label);
  if (names.empty()) throw data_error("build_label_set: page collection has no labels");
  return LabelSet(std::move(names));
}

// First-encounter-order vocabulary build over a deterministic traversal:
// per document, node strings then local-edge strings per position, then
// skip-edge strings per graph edge. Freezes both vocabularies.
inline Vocabularies build_vocabularies(const std::vector<Document>& docs,
                                       const std::vector<ParentGraph>& graphs,
                                       const Featurizer& fx) {
  if (docs.size() != graphs.size())
    throw structural_error("build_vocabularies: docs/graphs size mismatch");
  Vocabularies v;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const Document& doc = docs[d];
    const ParentGraph& g = graphs[d];
    for (int k = 0; k < g.n; ++k) {
      for (const std::string& s : fx.node_strings(doc, k)) v.node.intern(s);
      for (const std::string& s : fx.local_edge_strings(doc, k)) v.pair.intern(s);
    }
    for (int k = 0; k < g.n; ++k)
      for (const ParentEdge& e : g.parents[static_cast<std::size_t>(k)])
        if (e.cls == EdgeClass::skip)
          for (const std::string& s : fx.skip_edge_strings(doc, e.parent, k)) v.pair.intern(s);
  }
  v.freeze();
  return v;
}

// Page version: every arc can play either the parent or the child role
// depending on the sampled ordering, so both tagged variants of both
// endpoints enter the pair vocabulary.
inline Vocabularies build_vocabularies(const PageCollection& collection, const Featurizer& fx) {
  Vocabularies v;
  for (const Page& p : collection.pages) {
    for (const std::string& s : fx.page_strings(p)) {
      v.node.intern(s);
      v.pair.intern(s);
    }
  }
  for (const Arc& arc : collection.links.arcs()) {
    for (int page : {arc.source, arc.target}) {
      const std::vector<std::string> strings =
          fx.page_strings(collection.pages[static_cast<std::size_t>(page)]);
      if (fx.config().tag_skip_endpoints) {
        for (const std::string& s : strings) v.pair.intern("j:" + s);
        for (const std::string& s : strings) v.pair.intern("k:" + s);
      }
    }
  }
  v.freeze();
  return v;
}

// Assembles a sequence instance over a prebuilt graph.
inline FeaturizedInstance featurize_sequence(const Document& doc, const ParentGraph& graph,
                                             const Featurizer& fx, Vocabularies& vocabs,
                                             const LabelSet* labels) {
  if (graph.n != static_cast<int>(doc.tokens.size()))
    throw structural_error("featurize_sequence: graph size mismatch");
  FeaturizedInstance inst;
  inst.graph = graph;
  inst.node_preds.reserve(static_cast<std::size_t>(graph.n));
  inst.start_preds.reserve(static_cast<std::size_t>(graph.n));
  inst.edge_preds.resize(static_cast<std::size_t>(graph.n));
  inst.gold.resize(static_cast<std::size_t>(graph.n), -1);
  std::vector<std::vector<std::string>> local_cache(static_cast<std::size_t>(graph.n));
  for (int k = 0; k < graph.n; ++k)
    local_cache[static_cast<std::size_t>(k)] = fx.local_edge_strings(doc, k);
  for (int k = 0; k < graph.n; ++k) {
    inst.node_preds.push_back(Featurizer::intern(fx.node_strings(doc, k), vocabs.node));
    inst.start_preds.push_back(
        Featurizer::intern(local_cache[static_cast<std::size_t>(k)], vocabs.pair));
    for (const ParentEdge& e : graph.parents[static_cast<std::size_t>(k)]) {
      if (e.cls == EdgeClass::local) {
        inst.edge_preds[static_cast<std::size_t>(k)].push_back(
            Featurizer::intern(local_cache[static_cast<std::size_t>(k)], vocabs.pair));
      } else {
        inst.edge_preds[static_cast<std::size_t>(k)].push_back(Featurizer::intern(
            fx.join_endpoint_strings(local_cache[static_cast<std::size_t>(e.parent)],
                                     local_cache[static_cast<std::size_t>(k)]),
            vocabs.pair));
      }
    }
    if (labels) inst.gold[static_cast<std::size_t>(k)] = labels->find(doc.tokens[static_cast<std::size_t>(k)].tag);
  }
  inst.validate_alignment(graph);
  return inst;
}

// Assembles a linked-docs instance for one page ordering. Node k of the
// instance is the page permutation[k]; callers map marginal rows back to
// pages through the same permutation.
inline FeaturizedInstance featurize_pages(const PageCollection& collection,
                                          const std::vector<int>& permutation, const Featurizer& fx,
                                          Vocabularies& vocabs, const LabelSet* labels) {
  const ParentGraph graph = build_link_dag(collection.links, permutation);
  FeaturizedInstance inst;
  inst.graph = graph;
  inst.edge_preds.resize(static_cast<std::size_t>(graph.n));
  inst.gold.resize(static_cast<std::size_t>(graph.n), -1);
  std::vector<std::vector<std::string>> page_cache(collection.pages.size());
  for (std::size_t p = 0; p < collection.pages.size(); ++p)
    page_cache[p] = fx.page_strings(collection.pages[p]);
  for (int k = 0; k < graph.n; ++k) {
    const int page = permutation[static_cast<std::size_t>(k)];
    inst.node_preds.push_back(
        Featurizer::intern(page_cache[static_cast<std::size_t>(page)], vocabs.node));
    inst.start_preds.push_back(
        Featurizer::intern(page_cache[static_cast<std::size_t>(page)], vocabs.pair));
    for (const ParentEdge& e : graph.parents[static_cast<std::size_t>(k)]) {
      const int parent_page = permutation[static_cast<std::size_t>(e.parent)];
      inst.edge_preds[static_cast<std::size_t>(k)].push_back(Featurizer::intern(
          fx.join_endpoint_strings(page_cache[static_cast<std::size_t>(parent_page)],
                                   page_cache[static_cast<std::size_t>(page)]),
          vocabs.pair));
    }
    if (labels)
      inst.gold[static_cast<std::size_t>(k)] =
          labels->find(collection.pages[static_cast<std::size_t>(page)].label);
  }
  inst.validate_alignment(graph);
  return inst;
}

}  // namespace mopmemm
