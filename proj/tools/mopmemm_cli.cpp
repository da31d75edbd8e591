// mopmemm command-line tool: train / predict / eval / verify / synth.
// Exit codes: 0 success, 1 verification failure, 2 usage error, 3 data error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mopmemm/mopmemm.hpp"
#include "mopmemm/verify.hpp"

namespace {

using namespace mopmemm;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

void print_iteration(const IterationRecord& rec) {
  std::printf("iter %d objective %.10g gnorm %.6g step %.6g\n", rec.iteration, rec.objective,
              rec.grad_inf_norm, rec.step);
}

std::vector<ParentGraph> build_sequence_graphs(const std::vector<Document>& docs, bool chain_only,
                                               int max_df, int skip_cap) {
  std::vector<ParentGraph> graphs;
  const auto df = count_document_frequencies(docs);
  for (const Document& doc : docs) {
    if (chain_only) {
      graphs.push_back(build_chain(static_cast<int>(doc.tokens.size())));
    } else {
      std::vector<std::string> tokens;
      tokens.reserve(doc.tokens.size());
      for (const Token& t : doc.tokens) tokens.push_back(t.word);
      graphs.push_back(build_ner_skip_graph(tokens, df, max_df, skip_cap));
    }
  }
  return graphs;
}

std::vector<FeaturizedInstance> featurize_corpus(const std::vector<Document>& docs,
                                                 const std::vector<ParentGraph>& graphs,
                                                 const Featurizer& fx, Vocabularies& vocabs,
                                                 const LabelSet* labels) {
  std::vector<FeaturizedInstance> out;
  out.reserve(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d)
    out.push_back(featurize_sequence(docs[d], graphs[d], fx, vocabs, labels));
  return out;
}

// Separate-training instance for a link corpus: every page once as a
// parentless START example, then per arc one incoming example (parent
// source, child target) and one outgoing example (parent target, child
// source), mirroring "each hyperlink was added to the training sets of both
// the incoming and outgoing edge models". The extra example nodes hang off
// the page nodes so the structure is still a valid parent-DAG.
FeaturizedInstance build_separate_link_instance(const PageCollection& collection,
                                                const Featurizer& fx, Vocabularies& vocabs,
                                                const LabelSet& labels) {
  const int pages = static_cast<int>(collection.pages.size());
  const int arcs = static_cast<int>(collection.links.arcs().size());
  FeaturizedInstance inst;
  inst.graph.n = pages + 2 * arcs;
  inst.graph.parents.resize(static_cast<std::size_t>(inst.graph.n));
  inst.graph.alphas.resize(static_cast<std::size_t>(inst.graph.n));
  inst.edge_preds.resize(static_cast<std::size_t>(inst.graph.n));

  std::vector<std::vector<std::string>> page_strings(collection.pages.size());
  for (std::size_t p = 0; p < collection.pages.size(); ++p)
    page_strings[p] = fx.page_strings(collection.pages[p]);

  for (int p = 0; p < pages; ++p) {
    inst.node_preds.push_back(Featurizer::intern(page_strings[static_cast<std::size_t>(p)],
                                                 vocabs.node));
    inst.start_preds.push_back(Featurizer::intern(page_strings[static_cast<std::size_t>(p)],
                                                  vocabs.pair));
    inst.gold.push_back(labels.index(collection.pages[static_cast<std::size_t>(p)].label));
  }
  for (int a = 0; a < arcs; ++a) {
    const Arc arc = collection.links.arcs()[static_cast<std::size_t>(a)];
    const auto add_example = [&](int parent_page, int child_page, EdgeClass cls) {
      const int node = static_cast<int>(inst.node_preds.size());
      inst.graph.parents[static_cast<std::size_t>(node)].push_back({parent_page, cls});
      inst.graph.alphas[static_cast<std::size_t>(node)].push_back(1.0);
      inst.node_preds.push_back(Featurizer::intern(
          page_strings[static_cast<std::size_t>(child_page)], vocabs.node));
      inst.start_preds.push_back(Featurizer::intern(
          page_strings[static_cast<std::size_t>(child_page)], vocabs.pair));
      inst.edge_preds[static_cast<std::size_t>(node)].push_back(Featurizer::intern(
          fx.join_endpoint_strings(page_strings[static_cast<std::size_t>(parent_page)],
                                   page_strings[static_cast<std::size_t>(child_page)]),
          vocabs.pair));
      inst.gold.push_back(labels.index(collection.pages[static_cast<std::size_t>(child_page)].label));
    };
    add_example(arc.source, arc.target, EdgeClass::incoming);
    add_example(arc.target, arc.source, EdgeClass::outgoing);
  }
  inst.validate_alignment(inst.graph);
  return inst;
}

struct CommonFlags {
  std::string config_path;
  std::string objective;  // empty: use the config file value or default
  bool separate = false;
  bool chain = false;
  std::string decode;  // empty: use the config file value or default
  int orderings = -1;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int max_df = -1;
  int skip_cap = -1;
  double ridge = -1.0;
  int max_iterations = -1;
  std::string out_path;
};

// Explicit flags override config-file values, which override defaults.
RunConfig resolve_config(const CommonFlags& flags, const std::string& task) {
  RunConfig cfg;
  if (!flags.config_path.empty()) cfg = load_run_config(flags.config_path);
  if (!task.empty()) cfg.task = task;
  if (!flags.objective.empty()) cfg.objective = objective_kind_from_string(flags.objective);
  if (flags.separate) cfg.separate = true;
  if (flags.max_df >= 0) cfg.max_df = flags.max_df;
  if (flags.skip_cap >= 0) cfg.skip_cap = flags.skip_cap;
  if (flags.ridge > 0.0) cfg.sigma2 = flags.ridge;
  if (flags.max_iterations > 0) cfg.max_iterations = flags.max_iterations;
  if (flags.seed_given) {
    cfg.seed = flags.seed;
    cfg.seed_set = true;
  }
  if (!flags.decode.empty()) cfg.decode = flags.decode;
  return cfg;
}

ObjectiveConfig objective_config(const RunConfig& cfg) {
  ObjectiveConfig oc;
  oc.kind = cfg.objective;
  oc.separate_pooled = cfg.separate;
  oc.sigma2 = cfg.sigma2;
  oc.max_iterations = cfg.max_iterations;
  oc.grad_tolerance = cfg.tolerance;
  oc.history = cfg.history;
  return oc;
}

int cmd_train(const CommonFlags& flags, const std::string& task, const std::string& train_path,
              const std::string& pages_path, const std::string& edges_path,
              const std::string& scheme_name, const std::string& init_path, bool init_separate) {
  RunConfig cfg = resolve_config(flags, task);
  if (!scheme_name.empty()) cfg.scheme = tag_scheme_from_string(scheme_name);
  if (flags.out_path.empty()) throw usage_error("train: --out MODEL is required");
  const ObjectiveConfig oc = objective_config(cfg);
  oc.validate();

  ModelArtifact artifact;
  artifact.task = cfg.task;
  artifact.scheme = cfg.scheme;
  artifact.objective = std::string(to_string(cfg.objective));
  artifact.separate = cfg.separate;
  artifact.seed = cfg.seed;
  artifact.sigma2 = cfg.sigma2;
  artifact.max_df = cfg.max_df;
  artifact.skip_cap = cfg.skip_cap;
  artifact.templates = cfg.resolved_templates();
  const Featurizer fx(artifact.templates);

  if (cfg.task == "sequence") {
    if (train_path.empty()) throw usage_error("train: --train CORPUS is required");
    const SequenceCorpus corpus = read_sequence_corpus(train_path, cfg.scheme);
    for (const std::string& w : corpus.warnings) std::cerr << "warning: " << w << "\n";
    if (corpus.docs.empty()) throw data_error("train: corpus is empty");
    const LabelSet labels = build_label_set(corpus.docs);
    const std::vector<ParentGraph> graphs =
        build_sequence_graphs(corpus.docs, flags.chain, cfg.max_df, cfg.skip_cap);
    Vocabularies vocabs = build_vocabularies(corpus.docs, graphs, fx);
    std::vector<EdgeClass> classes = {EdgeClass::local};
    if (!flags.chain) classes.push_back(EdgeClass::skip);
    const ParameterLayout layout(labels.size(), vocabs.node.size(), vocabs.pair.size(), classes);
    const std::vector<FeaturizedInstance> data =
        featurize_corpus(corpus.docs, graphs, fx, vocabs, &labels);

    std::vector<double> init;
    if (!init_path.empty()) {
      const ModelArtifact warm = load_model(init_path);
      if (warm.layout().total() != layout.total())
        throw data_error("train: --init artifact layout does not match this corpus/config");
      init = warm.to_model_set().pack();
    } else if (init_separate) {
      ObjectiveConfig pre = oc;
      pre.kind = ObjectiveKind::conditional;
      pre.separate_pooled = true;
      std::cout << "separate pretraining\n";
      const FitResult warm = fit(data, labels, layout, pre, {}, print_iteration);
      init = warm.models.pack();
    }
    std::cout << "training " << to_string(cfg.objective) << (cfg.separate ? " (separate)" : "")
              << " on " << data.size() << " documents, " << layout.total() << " parameters\n";
    const FitResult result = fit(data, labels, layout, oc, init, print_iteration);
    std::cout << "finished: objective " << result.objective << ", "
              << (result.converged ? "converged" : "iteration limit") << "\n";

    ModelArtifact trained = ModelArtifact::from_model_set(result.models, vocabs);
    trained.task = artifact.task;
    trained.scheme = artifact.scheme;
    trained.objective = artifact.objective;
    trained.separate = artifact.separate;
    trained.seed = artifact.seed;
    trained.sigma2 = artifact.sigma2;
    trained.max_df = artifact.max_df;
    trained.skip_cap = artifact.skip_cap;
    trained.templates = artifact.templates;
    trained.iterations = static_cast<int>(result.trace.size());
    save_model(flags.out_path, trained);
    std::cout << "model written to " << flags.out_path << "\n";
    return kExitOk;
  }

  if (cfg.task != "linked-docs") throw usage_error("train: unknown task '" + cfg.task + "'");
  if (pages_path.empty() || edges_path.empty())
    throw usage_error("train: --pages and --edges are required for linked-docs");
  const bool stochastic = !(cfg.separate);
  if (stochastic && !cfg.seed_set)
    throw usage_error("train: --seed is required for linked-docs training over sampled orderings");
  const LinkCorpus corpus = read_link_corpus(pages_path, edges_path);
  for (const std::string& w : corpus.warnings) std::cerr << "warning: " << w << "\n";
  const LabelSet labels = build_label_set(corpus.collection);
  Vocabularies vocabs = build_vocabularies(corpus.collection, fx);
  const ParameterLayout layout(labels.size(), vocabs.node.size(), vocabs.pair.size(),
                               {EdgeClass::local, EdgeClass::incoming, EdgeClass::outgoing});

  std::vector<FeaturizedInstance> data;
  if (cfg.separate) {
    data.push_back(build_separate_link_instance(corpus.collection, fx, vocabs, labels));
  } else {
    const int orderings = flags.orderings > 0 ? flags.orderings : cfg.orderings_train;
    const auto perms =
        sample_permutations(corpus.collection.links.num_pages(), orderings, cfg.seed);
    for (const auto& perm : perms)
      data.push_back(featurize_pages(corpus.collection, perm, fx, vocabs, &labels));
    std::cout << "training over " << orderings << " sampled orderings\n";
  }

  std::vector<double> init;
  if (!init_path.empty()) {
    const ModelArtifact warm = load_model(init_path);
    if (warm.layout().total() != layout.total())
      throw data_error("train: --init artifact layout does not match this corpus/config");
    init = warm.to_model_set().pack();
  } else if (init_separate) {
    ObjectiveConfig pre = oc;
    pre.kind = ObjectiveKind::conditional;
    pre.separate_pooled = true;
    std::vector<FeaturizedInstance> pool;
    pool.push_back(build_separate_link_instance(corpus.collection, fx, vocabs, labels));
    std::cout << "separate pretraining\n";
    const FitResult warm = fit(pool, labels, layout, pre, {}, print_iteration);
    init = warm.models.pack();
  }
  const FitResult result = fit(data, labels, layout, oc, init, print_iteration);
  std::cout << "finished: objective " << result.objective << ", "
            << (result.converged ? "converged" : "iteration limit") << "\n";

  ModelArtifact trained = ModelArtifact::from_model_set(result.models, vocabs);
  trained.task = artifact.task;
  trained.scheme = TagScheme::raw;
  trained.objective = artifact.objective;
  trained.separate = artifact.separate;
  trained.seed = artifact.seed;
  trained.sigma2 = artifact.sigma2;
  trained.max_df = artifact.max_df;
  trained.skip_cap = artifact.skip_cap;
  trained.templates = artifact.templates;
  trained.iterations = static_cast<int>(result.trace.size());
  save_model(flags.out_path, trained);
  std::cout << "model written to " << flags.out_path << "\n";
  return kExitOk;
}

int cmd_predict(const CommonFlags& flags, const std::string& model_path,
                const std::string& input_path, const std::string& pages_path,
                const std::string& edges_path, const std::string& marginals_path) {
  if (model_path.empty()) throw usage_error("predict: --model MODEL is required");
  if (flags.out_path.empty()) throw usage_error("predict: --out PATH is required");
  const RunConfig cfg = resolve_config(flags, "");
  const std::string decode = cfg.decode;
  const ModelArtifact artifact = load_model(model_path);
  const ModelSet models = artifact.to_model_set();
  Vocabularies vocabs = artifact.vocabularies();
  const Featurizer fx(artifact.templates);

  if (artifact.task == "sequence") {
    if (input_path.empty()) throw usage_error("predict: --input CORPUS is required");
    const SequenceCorpus corpus = read_sequence_corpus(input_path, artifact.scheme);
    for (const std::string& w : corpus.warnings) std::cerr << "warning: " << w << "\n";
    const bool chain_model = artifact.classes.size() == 1;
    const std::vector<ParentGraph> graphs =
        build_sequence_graphs(corpus.docs, chain_model, artifact.max_df, artifact.skip_cap);

    std::vector<std::vector<std::string>> predictions;
    MarginalTable all_marginals(0, artifact.labels.size());
    for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
      const FeaturizedInstance inst =
          featurize_sequence(corpus.docs[d], graphs[d], fx, vocabs, nullptr);
      std::vector<int> decoded;
      if (decode == "viterbi") {
        decoded = viterbi_chain(models, inst);
      } else if (decode == "posterior") {
        const MarginalTable marg = forward_marginals(models, inst.graph, inst);
        decoded = posterior_decode(marg);
        if (!marginals_path.empty()) {
          all_marginals.rows += marg.rows;
          all_marginals.data.insert(all_marginals.data.end(), marg.data.begin(), marg.data.end());
        }
      } else {
        throw usage_error("predict: --decode must be posterior or viterbi");
      }
      std::vector<std::string> tags;
      for (int y : decoded) tags.push_back(artifact.labels.name(y));
      predictions.push_back(std::move(tags));
    }
    write_predictions(flags.out_path, corpus.docs, predictions);
    if (!marginals_path.empty() && decode == "posterior")
      write_marginal_table(marginals_path, all_marginals, artifact.labels);
    std::cout << "predictions written to " << flags.out_path << "\n";
    return kExitOk;
  }

  if (artifact.task != "linked-docs")
    throw data_error("predict: artifact has unknown task '" + artifact.task + "'");
  if (pages_path.empty() || edges_path.empty())
    throw usage_error("predict: --pages and --edges are required for linked-docs");
  if (decode == "viterbi")
    throw unsupported_error(
        "predict: viterbi decoding is unsupported for linked-docs graphs (skip edges)");
  if (!flags.seed_given) throw usage_error("predict: --seed is required for ordering averaging");
  const LinkCorpus corpus = read_link_corpus(pages_path, edges_path);
  for (const std::string& w : corpus.warnings) std::cerr << "warning: " << w << "\n";
  const int orderings = flags.orderings > 0 ? flags.orderings : cfg.orderings_predict;
  const MarginalTable averaged =
      averaged_marginals(models, corpus.collection, orderings, flags.seed, fx, vocabs);
  std::vector<std::string> predicted;
  for (int p = 0; p < averaged.rows; ++p) {
    std::span<const double> row = averaged.row(p);
    int best = 0;
    for (int y = 1; y < averaged.cols; ++y)
      if (row[static_cast<std::size_t>(y)] > row[static_cast<std::size_t>(best)]) best = y;
    predicted.push_back(artifact.labels.name(best));
  }
  write_page_predictions(flags.out_path, corpus.collection, predicted);
  if (!marginals_path.empty()) write_marginal_table(marginals_path, averaged, artifact.labels);
  std::cout << "predictions written to " << flags.out_path << "\n";
  return kExitOk;
}

int cmd_eval(const CommonFlags& flags, const std::string& task, const std::string& pred_path,
             const std::string& scheme_name, bool strict) {
  if (pred_path.empty()) throw usage_error("eval: --pred PATH is required");
  ScoreReport report;
  TagScheme scheme = TagScheme::raw;
  if (task == "sequence" || task.empty()) {
    scheme = scheme_name.empty() ? TagScheme::iob1 : tag_scheme_from_string(scheme_name);
    const SequenceCorpus corpus = read_sequence_corpus(pred_path, scheme);
    EntityScorer scorer(scheme, strict);
    for (const Document& doc : corpus.docs) {
      std::vector<std::string> gold, pred;
      for (const Token& tok : doc.tokens) {
        if (tok.extras.empty())
          throw data_error("eval: predictions file needs columns word gold predicted");
        gold.push_back(tok.extras.back());
        pred.push_back(tok.tag);
        if (scheme != TagScheme::raw) detail::validate_tag(gold.back(), scheme, 0);
      }
      scorer.add(gold, pred);
    }
    report = scorer.report();
  } else if (task == "linked-docs") {
    std::ifstream in(pred_path);
    if (!in) throw data_error("cannot open predictions file '" + pred_path + "'");
    std::vector<std::string> gold, pred;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const std::size_t t1 = line.find('\t');
      const std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
      if (t2 == std::string::npos)
        throw format_error("predictions line " + std::to_string(line_no) +
                           ": expected id TAB gold TAB predicted");
      gold.push_back(line.substr(t1 + 1, t2 - t1 - 1));
      pred.push_back(line.substr(t2 + 1));
    }
    EntityScorer scorer(TagScheme::raw);
    scorer.add(gold, pred);
    report = scorer.report();
  } else {
    throw usage_error("eval: unknown task '" + task + "'");
  }

  if (!flags.out_path.empty()) {
    std::ofstream out(flags.out_path);
    if (!out) throw data_error("cannot write report file '" + flags.out_path + "'");
    write_report(out, report, scheme);
    std::cout << "report written to " << flags.out_path << "\n";
  } else {
    write_report(std::cout, report, scheme);
  }
  return kExitOk;
}

int cmd_verify(const CommonFlags& flags) {
  std::cout << "running verification suites\n";
  const std::vector<verify::CheckResult> results = verify::run_all(std::cout);
  if (!flags.out_path.empty()) {
    std::ofstream out(flags.out_path);
    if (!out) throw data_error("cannot write results file '" + flags.out_path + "'");
    verify::write_results(out, results);
  }
  verify::write_results(std::cout, results);
  return verify::all_passed(results) ? kExitOk : kExitVerifyFailure;
}

int cmd_synth(const CommonFlags& flags, int sequences, int min_len, int max_len, int num_labels,
              double copy_strength, double cue_probability) {
  if (flags.out_path.empty()) throw usage_error("synth: --out PATH is required");
  if (!flags.seed_given) throw usage_error("synth: --seed is required");
  SyntheticConfig cfg;
  cfg.num_sequences = sequences;
  cfg.min_length = min_len;
  cfg.max_length = max_len;
  cfg.num_labels = num_labels;
  cfg.copy_strength = copy_strength;
  cfg.cue_probability = cue_probability;
  cfg.seed = flags.seed;
  const SyntheticDataset data = generate_synthetic(cfg);
  write_sequence_corpus(flags.out_path, data.docs);
  std::cout << "synthetic corpus (" << data.docs.size() << " sequences) written to "
            << flags.out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixture-of-parents MEMM toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string task, train_path, pages_path, edges_path, scheme_name, init_path;
  std::string model_path, input_path, marginals_path, pred_path;
  bool init_separate = false;
  bool strict_spans = false;
  int synth_sequences = 500, synth_min_len = 20, synth_max_len = 30, synth_labels = 3;
  double synth_copy = 0.9, synth_cue = 0.7;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "JSON run configuration");
    cmd->add_option("--seed", flags.seed, "random seed")->each([&](const std::string&) {
      flags.seed_given = true;
    });
    cmd->add_option("--out", flags.out_path, "output path");
  };

  CLI::App* train = app.add_subcommand("train", "fit a model");
  add_common(train);
  train->add_option("--task", task, "sequence or linked-docs (default sequence)");
  train->add_option("--train", train_path, "training corpus (CoNLL columns)");
  train->add_option("--pages", pages_path, "pages TSV (linked-docs)");
  train->add_option("--edges", edges_path, "edges TSV (linked-docs)");
  train->add_option("--scheme", scheme_name, "tag scheme: iob1, bio2, raw");
  train->add_option("--objective", flags.objective,
                    "conditional or marginal (default conditional)");
  train->add_flag("--separate", flags.separate,
                  "separate training: pool each edge class's edges");
  train->add_flag("--chain", flags.chain, "pure chain model (no skip edges)");
  train->add_option("--init", init_path, "warm-start model artifact");
  train->add_flag("--init-separate", init_separate,
                  "pretrain separately, then start the main objective from it");
  train->add_option("--orderings", flags.orderings, "training orderings (linked-docs)");
  train->add_option("--max-df", flags.max_df, "skip-edge document-frequency cutoff");
  train->add_option("--skip-cap", flags.skip_cap, "most recent occurrences to connect");
  train->add_option("--ridge", flags.ridge, "ridge sigma^2");
  train->add_option("--max-iters", flags.max_iterations, "optimizer iteration cap");

  CLI::App* predict = app.add_subcommand("predict", "label new data with a model");
  add_common(predict);
  predict->add_option("--model", model_path, "model artifact")->required();
  predict->add_option("--input", input_path, "input corpus (sequence task)");
  predict->add_option("--pages", pages_path, "pages TSV (linked-docs)");
  predict->add_option("--edges", edges_path, "edges TSV (linked-docs)");
  predict->add_option("--decode", flags.decode, "posterior or viterbi (default posterior)");
  predict->add_option("--orderings", flags.orderings, "orderings to average (linked-docs)");
  predict->add_option("--write-marginals", marginals_path, "also write the marginal table");

  CLI::App* eval = app.add_subcommand("eval", "score a predictions file");
  add_common(eval);
  eval->add_option("--task", task, "sequence or linked-docs (default sequence)");
  eval->add_option("--pred", pred_path, "predictions file from predict");
  eval->add_option("--scheme", scheme_name, "tag scheme: iob1, bio2, raw");
  eval->add_flag("--strict", strict_spans, "strict span decoding (no repair)");

  CLI::App* verify_cmd = app.add_subcommand("verify", "run oracle and property suites");
  add_common(verify_cmd);

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  add_common(synth);
  synth->add_option("--sequences", synth_sequences, "number of sequences");
  synth->add_option("--min-len", synth_min_len, "minimum sequence length");
  synth->add_option("--max-len", synth_max_len, "maximum sequence length");
  synth->add_option("--labels", synth_labels, "label alphabet size");
  synth->add_option("--copy-strength", synth_copy, "probability of copying the chosen parent");
  synth->add_option("--cue-prob", synth_cue, "probability a filler reveals its label");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error[usage]: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (train->parsed())
      return cmd_train(flags, task, train_path, pages_path, edges_path, scheme_name, init_path,
                       init_separate);
    if (predict->parsed())
      return cmd_predict(flags, model_path, input_path, pages_path, edges_path, marginals_path);
    if (eval->parsed()) return cmd_eval(flags, task, pred_path, scheme_name, strict_spans);
    if (verify_cmd->parsed()) return cmd_verify(flags);
    if (synth->parsed())
      return cmd_synth(flags, synth_sequences, synth_min_len, synth_max_len, synth_labels,
                       synth_copy, synth_cue);
  } catch (const usage_error& e) {
    std::cerr << "error[usage]: " << e.what() << "\n";
    return kExitUsage;
  } catch (const unsupported_error& e) {
    std::cerr << "error[unsupported]: " << e.what() << "\n";
    return kExitUsage;
  } catch (const parse_error& e) {
    std::cerr << "error[parse]: " << e.what() << "\n";
    return kExitData;
  } catch (const format_error& e) {
    std::cerr << "error[format]: " << e.what() << "\n";
    return kExitData;
  } catch (const data_error& e) {
    std::cerr << "error[data]: " << e.what() << "\n";
    return kExitData;
  } catch (const error& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return kExitData;
  }
  std::cerr << "error[usage]: no subcommand\n";
  return kExitUsage;
}
