#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mopmemm/io.hpp"
#include "mopmemm/verify.hpp"

using namespace mopmemm;

namespace {

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name, const std::string& contents = "") {
    path = std::filesystem::temp_directory_path() / ("mopmemm_test_" + name);
    if (!contents.empty()) {
      std::ofstream out(path);
      out << contents;
    }
  }
  ~TempFile() { std::filesystem::remove(path); }
  std::string str() const { return path.string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("CoNLL reader splits sentences and documents") {
  TempFile f("corpus.conll",
             "Mary I-PER\nspoke O\n\nParis I-LOC\n");
  const SequenceCorpus corpus = read_sequence_corpus(f.str(), TagScheme::iob1);
  REQUIRE(corpus.docs.size() == 1);
  const Document& doc = corpus.docs[0];
  CHECK(doc.tokens.size() == 3);
  CHECK(doc.num_sentences == 2);
  CHECK(doc.tokens[0].sentence == 0);
  CHECK(doc.tokens[2].sentence == 1);
  CHECK(doc.tokens[2].word == "Paris");
  CHECK(doc.tokens[2].tag == "I-LOC");
}

TEST_CASE("-DOCSTART- lines start new documents and are excluded") {
  TempFile f("docstart.conll",
             "-DOCSTART- O\n\na O\n\n-DOCSTART- O\n\nb O\nc O\n");
  const SequenceCorpus corpus = read_sequence_corpus(f.str(), TagScheme::iob1);
  REQUIRE(corpus.docs.size() == 2);
  CHECK(corpus.docs[0].tokens.size() == 1);
  CHECK(corpus.docs[1].tokens.size() == 2);
  for (const Document& d : corpus.docs)
    for (const Token& t : d.tokens) CHECK(t.word != "-DOCSTART-");
}

TEST_CASE("empty corpus files produce a warning, ragged columns an error") {
  TempFile empty("empty.conll", "\n\n");
  const SequenceCorpus corpus = read_sequence_corpus(empty.str(), TagScheme::iob1);
  CHECK(corpus.docs.empty());
  CHECK(!corpus.warnings.empty());

  TempFile ragged("ragged.conll", "a NNP O\nb O\n");
  try {
    read_sequence_corpus(ragged.str(), TagScheme::iob1);
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  TempFile badtag("badtag.conll", "a Q-PER\n");
  CHECK_THROWS_AS(read_sequence_corpus(badtag.str(), TagScheme::iob1), format_error);
  // The raw scheme accepts arbitrary tags.
  const SequenceCorpus raw = read_sequence_corpus(badtag.str(), TagScheme::raw);
  CHECK(raw.docs.size() == 1);

  CHECK_THROWS_AS(read_sequence_corpus("/nonexistent/file", TagScheme::raw), data_error);
}

TEST_CASE("extra CoNLL columns are surfaced to feature templates") {
  TempFile f("cols.conll", "Mary NNP B-NP I-PER\nspoke VBD B-VP O\n");
  const SequenceCorpus corpus = read_sequence_corpus(f.str(), TagScheme::iob1);
  REQUIRE(corpus.docs.size() == 1);
  REQUIRE(corpus.docs[0].tokens[0].extras.size() == 2);
  CHECK(corpus.docs[0].tokens[0].extras[0] == "NNP");

  TemplateConfig cfg;
  cfg.node_templates = {"col:0:0"};
  cfg.edge_templates = {"bias"};
  const Featurizer fx(cfg);
  const std::vector<std::string> strings = fx.node_strings(corpus.docs[0], 0);
  REQUIRE(strings.size() == 1);
  CHECK(strings[0] == "c0[0]=NNP");
}

TEST_CASE("sequence corpus writer round-trips through the reader") {
  SyntheticConfig cfg;
  cfg.num_sequences = 5;
  cfg.seed = 3;
  const SyntheticDataset data = generate_synthetic(cfg);
  TempFile f("synth.conll");
  write_sequence_corpus(f.str(), data.docs);
  const SequenceCorpus back = read_sequence_corpus(f.str(), TagScheme::raw);
  REQUIRE(back.docs.size() == data.docs.size());
  for (std::size_t d = 0; d < data.docs.size(); ++d) {
    REQUIRE(back.docs[d].tokens.size() == data.docs[d].tokens.size());
    for (std::size_t k = 0; k < data.docs[d].tokens.size(); ++k) {
      CHECK(back.docs[d].tokens[k].word == data.docs[d].tokens[k].word);
      CHECK(back.docs[d].tokens[k].tag == data.docs[d].tokens[k].tag);
    }
  }
}

TEST_CASE("link corpus reader validates pages and edges") {
  TempFile pages("pages.tsv", "p1\tcourse\tlecture exam\np2\tfaculty\tresearch\n");
  TempFile edges("edges.tsv", "p1\tp2\n");
  const LinkCorpus corpus = read_link_corpus(pages.str(), edges.str());
  CHECK(corpus.collection.pages.size() == 2);
  CHECK(corpus.collection.links.arcs().size() == 1);
  CHECK(corpus.collection.links.has_arc(0, 1));

  TempFile dangling("edges_dangling.tsv", "p1\tp9\n");
  try {
    read_link_corpus(pages.str(), dangling.str());
    FAIL("expected format_error");
  } catch (const format_error& e) {
    CHECK(std::string(e.what()).find("p9") != std::string::npos);
  }

  TempFile dup_pages("pages_dup.tsv", "p1\tcourse\ta\np1\tfaculty\tb\n");
  CHECK_THROWS_AS(read_link_corpus(dup_pages.str(), edges.str()), format_error);

  TempFile selfloop("edges_self.tsv", "p1\tp1\n");
  CHECK_THROWS_AS(read_link_corpus(pages.str(), selfloop.str()), format_error);

  TempFile dup_edges("edges_dup.tsv", "p1\tp2\np1\tp2\n");
  const LinkCorpus collapsed = read_link_corpus(pages.str(), dup_edges.str());
  CHECK(collapsed.collection.links.arcs().size() == 1);
  CHECK(collapsed.warnings.size() == 1);
}

TEST_CASE("model artifacts round-trip byte-identically") {
  Rng rng(51);
  const verify::RandomCase c = verify::make_random_case(rng);
  Vocabularies vocabs;
  for (int i = 0; i < c.models.layout().node_vocab(); ++i)
    vocabs.node.intern("n" + std::to_string(i));
  for (int i = 0; i < c.models.layout().pair_vocab(); ++i)
    vocabs.pair.intern("p" + std::to_string(i));
  vocabs.freeze();

  ModelArtifact artifact = ModelArtifact::from_model_set(c.models, vocabs);
  artifact.task = "sequence";
  artifact.scheme = TagScheme::iob1;
  artifact.objective = "marginal";
  artifact.seed = 99;
  artifact.iterations = 17;
  artifact.templates = TemplateConfig::ner_default();

  TempFile f1("model1.txt"), f2("model2.txt");
  save_model(f1.str(), artifact);
  const ModelArtifact loaded = load_model(f1.str());
  save_model(f2.str(), loaded);
  CHECK(slurp(f1.str()) == slurp(f2.str()));

  // The reconstructed model reproduces the original weights exactly.
  const ModelSet rebuilt = loaded.to_model_set();
  CHECK(rebuilt.pack() == c.models.pack());
  CHECK(loaded.labels.names() == c.labels.names());
  CHECK(loaded.templates == artifact.templates);
}

TEST_CASE("version-mismatched artifacts are rejected with a descriptive error") {
  TempFile f("badversion.txt", "mopmemm-model 999\n");
  try {
    load_model(f.str());
    FAIL("expected format_error");
  } catch (const format_error& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
  CHECK_THROWS_AS(load_model("/nonexistent/model"), data_error);
}

TEST_CASE("malformed weight lines are rejected") {
  Rng rng(53);
  const verify::RandomCase c = verify::make_random_case(rng);
  Vocabularies vocabs;
  for (int i = 0; i < c.models.layout().node_vocab(); ++i)
    vocabs.node.intern("n" + std::to_string(i));
  for (int i = 0; i < c.models.layout().pair_vocab(); ++i)
    vocabs.pair.intern("p" + std::to_string(i));
  vocabs.freeze();
  ModelArtifact artifact = ModelArtifact::from_model_set(c.models, vocabs);
  TempFile f("mangled.txt");
  save_model(f.str(), artifact);
  std::string text = slurp(f.str());
  const std::size_t pos = text.find("\nw ");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 4, "\nw x");
  {
    std::ofstream out(f.str());
    out << text;
  }
  CHECK_THROWS_AS(load_model(f.str()), format_error);
}

TEST_CASE("marginal tables are written with full precision and a label header") {
  MarginalTable table(2, 2);
  table.row(0)[0] = 0.25;
  table.row(0)[1] = 0.75;
  table.row(1)[0] = 1.0 / 3.0;
  table.row(1)[1] = 2.0 / 3.0;
  const LabelSet labels({"a", "b"});
  TempFile f("marginals.txt");
  write_marginal_table(f.str(), table, labels);
  const std::string text = slurp(f.str());
  CHECK(text.find("# a b\n") != std::string::npos);
  CHECK(text.find("0.25 0.75\n") != std::string::npos);
  CHECK(text.find("0.33333333333333331") != std::string::npos);
}

TEST_CASE("run configuration parses from JSON with paper defaults") {
  const RunConfig defaults;
  CHECK(defaults.max_df == 100);
  CHECK(defaults.skip_cap == 5);
  CHECK(defaults.orderings_predict == 50);
  CHECK(defaults.orderings_train == 10);
  CHECK(defaults.sigma2 == 10.0);

  TempFile f("config.json",
             R"({"task": "sequence", "scheme": "bio2", "objective": "marginal",
                 "ridge": 2.5, "seed": 42, "max_df": 50,
                 "node_templates": ["bias", "w:0"], "edge_templates": ["bias"]})");
  const RunConfig cfg = load_run_config(f.str());
  CHECK(cfg.scheme == TagScheme::bio2);
  CHECK(cfg.objective == ObjectiveKind::marginal);
  CHECK(cfg.sigma2 == 2.5);
  CHECK(cfg.seed == 42);
  CHECK(cfg.seed_set);
  CHECK(cfg.max_df == 50);
  REQUIRE(cfg.templates.has_value());
  CHECK(cfg.templates->node_templates == std::vector<std::string>{"bias", "w:0"});

  TempFile bad("bad.json", "{not json");
  CHECK_THROWS_AS(load_run_config(bad.str()), parse_error);
}

TEST_CASE("report writer emits machine-readable key-value lines") {
  EntityScorer scorer(TagScheme::bio2);
  scorer.add(std::vector<std::string>{"B-PER", "O"}, std::vector<std::string>{"B-PER", "O"});
  std::ostringstream out;
  write_report(out, scorer.report(), TagScheme::bio2);
  const std::string text = out.str();
  CHECK(text.find("report.f1 1\n") != std::string::npos);
  CHECK(text.find("report.token_accuracy 1\n") != std::string::npos);
  CHECK(text.find("report.fp_rate 0\n") != std::string::npos);
}
