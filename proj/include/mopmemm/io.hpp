// Data ingestion and persistence: CoNLL-format sequence corpora, TSV link
// corpora, the versioned text model artifact (canonically ordered so
// load-then-save is byte-identical), prediction and report writers, and the
// JSON run configuration.
#pragma once

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mopmemm/core.hpp"
#include "mopmemm/evaluation.hpp"
#include "mopmemm/features.hpp"
#include "mopmemm/inference.hpp"
#include "mopmemm/model.hpp"
#include "mopmemm/training.hpp"

namespace mopmemm {

// ---------------------------------------------------------------------------
// Sequence corpus (CoNLL column format). Whitespace-separated columns, word
// first, tag last; blank line ends a sentence; a line whose first column is
// -DOCSTART- starts a new document and is excluded from the tokens.
// ---------------------------------------------------------------------------

struct SequenceCorpus {
  std::vector<Document> docs;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string field;
  while (ss >> field) out.push_back(field);
  return out;
}

inline void validate_tag(const std::string& tag, TagScheme scheme, int line_no) {
  if (scheme == TagScheme::raw) return;
  try {
    parse_tag(tag);
  } catch (const format_error&) {
    throw format_error("line " + std::to_string(line_no) + ": unknown tag '" + tag + "'");
  }
}

}  // namespace detail

inline SequenceCorpus read_sequence_corpus(const std::string& path, TagScheme scheme) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open corpus file '" + path + "'");
  SequenceCorpus corpus;
  Document current;
  int sentence = 0;
  bool sentence_open = false;
  bool doc_open = false;
  int expected_columns = -1;
  int line_no = 0;

  auto flush_sentence = [&]() {
    if (sentence_open) {
      ++sentence;
      ++current.num_sentences;
      sentence_open = false;
    }
  };
  auto flush_document = [&]() {
    flush_sentence();
    if (!current.tokens.empty()) corpus.docs.push_back(std::move(current));
    current = Document{};
    sentence = 0;
    doc_open = false;
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> cols = detail::split_whitespace(line);
    if (cols.empty()) {
      flush_sentence();
      continue;
    }
    if (cols[0] == "-DOCSTART-") {
      flush_document();
      doc_open = true;
      continue;
    }
    if (cols.size() < 2)
      throw parse_error("line " + std::to_string(line_no) +
                        ": expected at least word and tag columns");
    if (expected_columns < 0) expected_columns = static_cast<int>(cols.size());
    if (static_cast<int>(cols.size()) != expected_columns)
      throw parse_error("line " + std::to_string(line_no) + ": ragged column count (" +
                        std::to_string(cols.size()) + " vs " + std::to_string(expected_columns) +
                        ")");
    detail::validate_tag(cols.back(), scheme, line_no);
    Token tok;
    tok.word = cols.front();
    tok.tag = cols.back();
    tok.extras.assign(cols.begin() + 1, cols.end() - 1);
    tok.sentence = sentence;
    current.tokens.push_back(std::move(tok));
    sentence_open = true;
  }
  flush_document();
  (void)doc_open;
  if (corpus.docs.empty()) corpus.warnings.push_back("corpus '" + path + "' contains no tokens");
  return corpus;
}

inline void write_sequence_corpus(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write corpus file '" + path + "'");
  for (const Document& doc : docs) {
    out << "-DOCSTART- O\n\n";
    int sentence = doc.tokens.empty() ? 0 : doc.tokens.front().sentence;
    for (const Token& tok : doc.tokens) {
      if (tok.sentence != sentence) {
        out << "\n";
        sentence = tok.sentence;
      }
      out << tok.word << " " << tok.tag << "\n";
    }
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// Link corpus. Pages: one record per line, tab-separated
// page-id TAB label TAB space-joined tokens. Edges: source TAB target.
// ---------------------------------------------------------------------------

struct LinkCorpus {
  PageCollection collection;
  std::vector<std::string> warnings;
};

inline LinkCorpus read_link_corpus(const std::string& pages_path, const std::string& edges_path) {
  std::ifstream pages_in(pages_path);
  if (!pages_in) throw data_error("cannot open pages file '" + pages_path + "'");
  LinkCorpus corpus;
  std::map<std::string, int> page_index;
  std::string line;
  int line_no = 0;
  while (std::getline(pages_in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const std::size_t tab = line.find('\t', pos);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(pos));
        break;
      }
      fields.push_back(line.substr(pos, tab - pos));
      pos = tab + 1;
    }
    if (fields.size() < 2)
      throw format_error("pages line " + std::to_string(line_no) +
                         ": expected page-id TAB label [TAB tokens]");
    Page page;
    page.id = fields[0];
    page.label = fields[1];
    if (fields.size() >= 3) page.tokens = detail::split_whitespace(fields[2]);
    if (!page_index.emplace(page.id, static_cast<int>(corpus.collection.pages.size())).second)
      throw format_error("pages line " + std::to_string(line_no) + ": duplicate page id '" +
                         page.id + "'");
    corpus.collection.pages.push_back(std::move(page));
  }

  corpus.collection.links = LinkGraph(static_cast<int>(corpus.collection.pages.size()));
  std::ifstream edges_in(edges_path);
  if (!edges_in) throw data_error("cannot open edges file '" + edges_path + "'");
  line_no = 0;
  while (std::getline(edges_in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw format_error("edges line " + std::to_string(line_no) +
                         ": expected source TAB target");
    const std::string src = line.substr(0, tab);
    const std::string dst = line.substr(tab + 1);
    auto find = [&](const std::string& id) {
      auto it = page_index.find(id);
      if (it == page_index.end())
        throw format_error("edges line " + std::to_string(line_no) + ": unknown page id '" + id +
                           "'");
      return it->second;
    };
    const int s = find(src);
    const int t = find(dst);
    if (s == t)
      throw format_error("edges line " + std::to_string(line_no) + ": self-loop on page '" + src +
                         "'");
    if (!corpus.collection.links.add_arc(s, t))
      corpus.warnings.push_back("edges line " + std::to_string(line_no) + ": duplicate arc " +
                                src + " -> " + dst + " collapsed");
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Model artifact: versioned, text-based, canonically ordered.
// ---------------------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

struct ModelArtifact {
  int version = kModelFormatVersion;
  std::string task = "sequence";  // or "linked-docs"
  TagScheme scheme = TagScheme::iob1;
  std::string objective = "conditional";
  bool separate = false;
  std::uint64_t seed = 0;
  int iterations = 0;
  double sigma2 = 10.0;
  int max_df = kDefaultMaxDocFreq;
  int skip_cap = kDefaultRecencyCap;
  TemplateConfig templates;
  LabelSet labels;
  std::vector<std::string> node_vocab;
  std::vector<std::string> pair_vocab;
  std::vector<EdgeClass> classes;
  std::vector<std::pair<std::int64_t, double>> weights;  // nonzero, ascending index

  ParameterLayout layout() const {
    return ParameterLayout(labels.size(), static_cast<int>(node_vocab.size()),
                           static_cast<int>(pair_vocab.size()), classes);
  }

  ModelSet to_model_set() const {
    ModelSet models(labels, layout());
    std::vector<double> theta(static_cast<std::size_t>(models.layout().total()), 0.0);
    for (const auto& [idx, val] : weights) theta[static_cast<std::size_t>(idx)] = val;
    models.unpack(theta);
    return models;
  }

  Vocabularies vocabularies() const {
    Vocabularies v;
    for (const std::string& s : node_vocab) v.node.intern(s);
    for (const std::string& s : pair_vocab) v.pair.intern(s);
    v.freeze();
    return v;
  }

  static ModelArtifact from_model_set(const ModelSet& models, const Vocabularies& vocabs) {
    ModelArtifact a;
    a.labels = models.labels();
    a.node_vocab = vocabs.node.names();
    a.pair_vocab = vocabs.pair.names();
    a.classes = models.layout().classes();
    const std::vector<double> theta = models.pack();
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(theta.size()); ++i)
      if (theta[static_cast<std::size_t>(i)] != 0.0)
        a.weights.emplace_back(i, theta[static_cast<std::size_t>(i)]);
    return a;
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline void save_model(const std::string& path, const ModelArtifact& artifact) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write model file '" + path + "'");
  out << "mopmemm-model " << artifact.version << "\n";
  out << "task " << artifact.task << "\n";
  out << "scheme " << to_string(artifact.scheme) << "\n";
  out << "objective " << artifact.objective << "\n";
  out << "separate " << (artifact.separate ? 1 : 0) << "\n";
  out << "seed " << artifact.seed << "\n";
  out << "iterations " << artifact.iterations << "\n";
  out << "sigma2 " << detail::format_double(artifact.sigma2) << "\n";
  out << "max-df " << artifact.max_df << "\n";
  out << "skip-cap " << artifact.skip_cap << "\n";
  out << "tag-skip-endpoints " << (artifact.templates.tag_skip_endpoints ? 1 : 0) << "\n";
  out << "sentence-windows " << (artifact.templates.sentence_windows ? 1 : 0) << "\n";
  out << "lowercase-bow " << (artifact.templates.lowercase_bow ? 1 : 0) << "\n";
  out << "node-templates " << artifact.templates.node_templates.size() << "\n";
  for (const std::string& t : artifact.templates.node_templates) out << "nt " << t << "\n";
  out << "edge-templates " << artifact.templates.edge_templates.size() << "\n";
  for (const std::string& t : artifact.templates.edge_templates) out << "et " << t << "\n";
  out << "labels " << artifact.labels.size() << "\n";
  for (const std::string& name : artifact.labels.names()) out << "label " << name << "\n";
  out << "node-vocab " << artifact.node_vocab.size() << "\n";
  for (const std::string& s : artifact.node_vocab) out << "nv " << s << "\n";
  out << "pair-vocab " << artifact.pair_vocab.size() << "\n";
  for (const std::string& s : artifact.pair_vocab) out << "pv " << s << "\n";
  out << "classes " << artifact.classes.size() << "\n";
  for (EdgeClass c : artifact.classes) out << "class " << to_string(c) << "\n";
  out << "weights " << artifact.weights.size() << "\n";
  for (const auto& [idx, val] : artifact.weights)
    out << "w " << idx << " " << detail::format_double(val) << "\n";
  out << "end\n";
  if (!out) throw data_error("write failure on model file '" + path + "'");
}

namespace detail {

class LineReader {
 public:
  LineReader(std::istream& in, const std::string& path) : in_(in), path_(path) {}

  std::string next() {
    std::string line;
    if (!std::getline(in_, line))
      throw format_error("model file '" + path_ + "': unexpected end at line " +
                         std::to_string(line_no_ + 1));
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  // Returns the remainder after "prefix "; errors if the prefix mismatches.
  std::string expect(const std::string& prefix) {
    const std::string line = next();
    if (line.compare(0, prefix.size() + 1, prefix + " ") != 0)
      throw format_error("model file '" + path_ + "' line " + std::to_string(line_no_) +
                         ": expected '" + prefix + "'");
    return line.substr(prefix.size() + 1);
  }

  int line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::string path_;
  int line_no_ = 0;
};

}  // namespace detail

inline ModelArtifact load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open model file '" + path + "'");
  detail::LineReader r(in, path);
  ModelArtifact a;
  a.version = std::stoi(r.expect("mopmemm-model"));
  if (a.version != kModelFormatVersion)
    throw format_error("model file '" + path + "': format version " + std::to_string(a.version) +
                       " not supported (expected " + std::to_string(kModelFormatVersion) + ")");
  a.task = r.expect("task");
  a.scheme = tag_scheme_from_string(r.expect("scheme"));
  a.objective = r.expect("objective");
  a.separate = std::stoi(r.expect("separate")) != 0;
  a.seed = std::stoull(r.expect("seed"));
  a.iterations = std::stoi(r.expect("iterations"));
  a.sigma2 = std::strtod(r.expect("sigma2").c_str(), nullptr);
  a.max_df = std::stoi(r.expect("max-df"));
  a.skip_cap = std::stoi(r.expect("skip-cap"));
  a.templates.tag_skip_endpoints = std::stoi(r.expect("tag-skip-endpoints")) != 0;
  a.templates.sentence_windows = std::stoi(r.expect("sentence-windows")) != 0;
  a.templates.lowercase_bow = std::stoi(r.expect("lowercase-bow")) != 0;
  const int nt = std::stoi(r.expect("node-templates"));
  for (int i = 0; i < nt; ++i) a.templates.node_templates.push_back(r.expect("nt"));
  const int et = std::stoi(r.expect("edge-templates"));
  for (int i = 0; i < et; ++i) a.templates.edge_templates.push_back(r.expect("et"));
  const int nl = std::stoi(r.expect("labels"));
  {
    std::vector<std::string> names;
    for (int i = 0; i < nl; ++i) names.push_back(r.expect("label"));
    a.labels = LabelSet(std::move(names));
  }
  const int nv = std::stoi(r.expect("node-vocab"));
  for (int i = 0; i < nv; ++i) a.node_vocab.push_back(r.expect("nv"));
  const int pv = std::stoi(r.expect("pair-vocab"));
  for (int i = 0; i < pv; ++i) a.pair_vocab.push_back(r.expect("pv"));
  const int nc = std::stoi(r.expect("classes"));
  for (int i = 0; i < nc; ++i) a.classes.push_back(edge_class_from_string(r.expect("class")));
  const long nw = std::stol(r.expect("weights"));
  const std::int64_t total = a.layout().total();
  std::int64_t prev = -1;
  for (long i = 0; i < nw; ++i) {
    const std::string rest = r.expect("w");
    char* after_idx = nullptr;
    const std::int64_t idx = std::strtoll(rest.c_str(), &after_idx, 10);
    char* after_val = nullptr;
    const double val = std::strtod(after_idx, &after_val);
    if (after_idx == rest.c_str() || after_val == after_idx)
      throw format_error("model file '" + path + "': malformed weight line '" + rest + "'");
    if (idx <= prev || idx >= total)
      throw format_error("model file '" + path + "': weight index out of order or range");
    prev = idx;
    a.weights.emplace_back(idx, val);
  }
  if (r.next() != "end") throw format_error("model file '" + path + "': missing end marker");
  return a;
}

// ---------------------------------------------------------------------------
// Prediction, marginal, and report writers.
// ---------------------------------------------------------------------------

inline void write_predictions(const std::string& path, const std::vector<Document>& docs,
                              const std::vector<std::vector<std::string>>& predicted) {
  if (docs.size() != predicted.size())
    throw structural_error("write_predictions: docs/predictions mismatch");
  std::ofstream out(path);
  if (!out) throw data_error("cannot write predictions file '" + path + "'");
  for (std::size_t d = 0; d < docs.size(); ++d) {
    out << "-DOCSTART- O O\n\n";
    const Document& doc = docs[d];
    int sentence = doc.tokens.empty() ? 0 : doc.tokens.front().sentence;
    for (std::size_t k = 0; k < doc.tokens.size(); ++k) {
      if (doc.tokens[k].sentence != sentence) {
        out << "\n";
        sentence = doc.tokens[k].sentence;
      }
      out << doc.tokens[k].word << " " << doc.tokens[k].tag << " " << predicted[d][k] << "\n";
    }
    out << "\n";
  }
}

inline void write_page_predictions(const std::string& path, const PageCollection& collection,
                                   const std::vector<std::string>& predicted) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write predictions file '" + path + "'");
  for (std::size_t p = 0; p < collection.pages.size(); ++p)
    out << collection.pages[p].id << "\t" << collection.pages[p].label << "\t" << predicted[p]
        << "\n";
}

inline void write_marginal_table(const std::string& path, const MarginalTable& table,
                                 const LabelSet& labels) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write marginals file '" + path + "'");
  out << "#";
  for (const std::string& name : labels.names()) out << " " << name;
  out << "\n";
  for (int k = 0; k < table.rows; ++k) {
    for (int y = 0; y < table.cols; ++y)
      out << (y == 0 ? "" : " ") << detail::format_double(table.at(k, y));
    out << "\n";
  }
}

inline void write_report(std::ostream& out, const ScoreReport& report, TagScheme scheme) {
  char buf[256];
  if (scheme != TagScheme::raw) {
    out << "entity-level scores (exact span match)\n";
    std::snprintf(buf, sizeof(buf), "  %-8s %8s %8s %8s %7s %7s\n", "type", "gold", "pred",
                  "correct", "P%", "R%");
    out << buf;
    for (const auto& [type, ts] : report.per_type) {
      std::snprintf(buf, sizeof(buf), "  %-8s %8ld %8ld %8ld %7.2f %7.2f\n", type.c_str(), ts.gold,
                    ts.predicted, ts.correct, 100.0 * ts.precision, 100.0 * ts.recall);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "  overall  P %.4f  R %.4f  F1 %.4f  FP%% %.2f  FN%% %.2f%s%s\n",
                  report.precision, report.recall, report.f1, 100.0 * report.fp_rate,
                  100.0 * report.fn_rate, report.degenerate_precision ? "  [no predictions]" : "",
                  report.degenerate_recall ? "  [no gold]" : "");
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "  tokens %ld  correct %ld  accuracy %.4f\n", report.tokens,
                report.correct_tokens, report.token_accuracy);
  out << buf;
  auto kv = [&](const char* key, double v) {
    out << key << " " << detail::format_double(v) << "\n";
  };
  kv("report.precision", report.precision);
  kv("report.recall", report.recall);
  kv("report.f1", report.f1);
  kv("report.fp_rate", report.fp_rate);
  kv("report.fn_rate", report.fn_rate);
  kv("report.token_accuracy", report.token_accuracy);
  out << "report.gold_entities " << report.gold_entities << "\n";
  out << "report.predicted_entities " << report.predicted_entities << "\n";
  out << "report.correct_entities " << report.correct_entities << "\n";
  out << "report.error_rate " << detail::format_double(1.0 - report.token_accuracy) << "\n";
}

// ---------------------------------------------------------------------------
// Run configuration (JSON). Flags given on the command line override file
// values.
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string task = "sequence";  // or "linked-docs"
  TagScheme scheme = TagScheme::iob1;
  std::optional<TemplateConfig> templates;  // task default when absent
  int max_df = kDefaultMaxDocFreq;
  int skip_cap = kDefaultRecencyCap;
  int orderings_predict = 50;
  int orderings_train = 10;
  ObjectiveKind objective = ObjectiveKind::conditional;
  bool separate = false;
  double sigma2 = 10.0;
  int max_iterations = 200;
  double tolerance = 1e-4;
  int history = 10;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string decode = "posterior";

  TemplateConfig resolved_templates() const {
    if (templates) return *templates;
    return task == "linked-docs" ? TemplateConfig::linked_docs_default()
                                  : TemplateConfig::ner_default();
  }
};

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error("config file '" + path + "': " + e.what());
  }
  RunConfig cfg;
  try {
    if (j.contains("task")) cfg.task = j["task"].get<std::string>();
    if (j.contains("scheme")) cfg.scheme = tag_scheme_from_string(j["scheme"].get<std::string>());
    if (j.contains("max_df")) cfg.max_df = j["max_df"].get<int>();
    if (j.contains("skip_cap")) cfg.skip_cap = j["skip_cap"].get<int>();
    if (j.contains("orderings_predict")) cfg.orderings_predict = j["orderings_predict"].get<int>();
    if (j.contains("orderings_train")) cfg.orderings_train = j["orderings_train"].get<int>();
    if (j.contains("objective"))
      cfg.objective = objective_kind_from_string(j["objective"].get<std::string>());
    if (j.contains("separate")) cfg.separate = j["separate"].get<bool>();
    if (j.contains("ridge")) cfg.sigma2 = j["ridge"].get<double>();
    if (j.contains("max_iterations")) cfg.max_iterations = j["max_iterations"].get<int>();
    if (j.contains("tolerance")) cfg.tolerance = j["tolerance"].get<double>();
    if (j.contains("history")) cfg.history = j["history"].get<int>();
    if (j.contains("seed")) {
      cfg.seed = j["seed"].get<std::uint64_t>();
      cfg.seed_set = true;
    }
    if (j.contains("decode")) cfg.decode = j["decode"].get<std::string>();
    if (j.contains("node_templates") || j.contains("edge_templates") ||
        j.contains("tag_skip_endpoints") || j.contains("sentence_windows") ||
        j.contains("lowercase_bow")) {
      TemplateConfig t = cfg.task == "linked-docs" ? TemplateConfig::linked_docs_default()
                                                   : TemplateConfig::ner_default();
      if (j.contains("node_templates"))
        t.node_templates = j["node_templates"].get<std::vector<std::string>>();
      if (j.contains("edge_templates"))
        t.edge_templates = j["edge_templates"].get<std::vector<std::string>>();
      if (j.contains("tag_skip_endpoints"))
        t.tag_skip_endpoints = j["tag_skip_endpoints"].get<bool>();
      if (j.contains("sentence_windows")) t.sentence_windows = j["sentence_windows"].get<bool>();
      if (j.contains("lowercase_bow")) t.lowercase_bow = j["lowercase_bow"].get<bool>();
      cfg.templates = std::move(t);
    }
  } catch (const nlohmann::json::exception& e) {
    throw parse_error("config file '" + path + "': " + e.what());
  }
  return cfg;
}

}  // namespace mopmemm
