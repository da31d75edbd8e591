#include <doctest.h>

#include "mopmemm/inference.hpp"
#include "mopmemm/oracle.hpp"
#include "mopmemm/verify.hpp"

using namespace mopmemm;

TEST_CASE("single node at zero weights has uniform marginals") {
  const LabelSet labels({"a", "b"});
  const ParameterLayout layout(2, 2, 2, {EdgeClass::local});
  const ModelSet models(labels, layout);
  FeaturizedInstance inst;
  inst.graph = build_chain(1);
  inst.node_preds = {PredicateVector::from_entries({{0, 1.0}})};
  inst.start_preds = {PredicateVector::from_entries({{0, 1.0}})};
  inst.edge_preds.resize(1);
  inst.gold = {0};
  const MarginalTable marg = forward_marginals(models, inst.graph, inst);
  CHECK(marg.at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(marg.at(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("an identity conditional copies the parent's marginal exactly") {
  // Mixture with a deterministic copy kernel: row 1 equals row 0.
  ParentGraph graph = build_chain(2);
  EdgeKernels kernels;
  kernels.num_labels = 3;
  kernels.start.resize(2);
  kernels.cond.resize(2);
  kernels.start[0] = {0.2, 0.5, 0.3};
  kernels.cond[1].push_back({1, 0, 0, 0, 1, 0, 0, 0, 1});
  const MarginalTable marg = forward_marginals_kernels(graph, kernels);
  for (int y = 0; y < 3; ++y) CHECK(marg.at(1, y) == marg.at(0, y));
}

TEST_CASE("forward marginals match enumeration on a seeded skip graph") {
  Rng rng(42);
  // n = 5 chain with one extra skip edge 0 -> 3, |Y| = 3, random weights.
  const LabelSet labels({"a", "b", "c"});
  const ParameterLayout layout(3, 6, 8, {EdgeClass::local, EdgeClass::skip});
  ModelSet models(labels, layout);
  verify::randomize_weights(models, rng, 1.5);
  ParentGraph graph = build_chain(5);
  graph.parents[3].push_back({0, EdgeClass::skip});
  graph = uniform_alphas(std::move(graph));
  FeaturizedInstance inst;
  inst.graph = graph;
  inst.edge_preds.resize(5);
  for (int k = 0; k < 5; ++k) {
    inst.node_preds.push_back(verify::random_preds(rng, 6, 3));
    inst.start_preds.push_back(verify::random_preds(rng, 8, 3));
    for (std::size_t i = 0; i < graph.parents[static_cast<std::size_t>(k)].size(); ++i)
      inst.edge_preds[static_cast<std::size_t>(k)].push_back(verify::random_preds(rng, 8, 3));
    inst.gold.push_back(rng.uniform_int(3));
  }

  const MarginalTable fast = forward_marginals(models, graph, inst);
  const MarginalTable exact = brute_force_marginals(models, graph, inst);
  CHECK(fast.max_abs_diff(exact) <= 1e-10);
  fast.validate(1e-10);

  // Posterior decode agrees with the argmax of the enumeration marginals.
  CHECK(posterior_decode(fast) == posterior_decode(exact));
}

TEST_CASE("posterior decoding breaks ties toward the lowest label index") {
  MarginalTable marg(2, 3);
  marg.row(0)[0] = 0.5;
  marg.row(0)[1] = 0.5;
  marg.row(0)[2] = 0.0;
  marg.row(1)[0] = 0.1;
  marg.row(1)[1] = 0.7;
  marg.row(1)[2] = 0.2;
  CHECK(posterior_decode(marg) == std::vector<int>{0, 1});
}

TEST_CASE("graph/instance mismatch raises a structural error") {
  const LabelSet labels({"a", "b"});
  const ParameterLayout layout(2, 2, 2, {EdgeClass::local});
  const ModelSet models(labels, layout);
  FeaturizedInstance inst;
  inst.graph = build_chain(2);
  inst.node_preds.resize(2);
  inst.start_preds.resize(2);
  inst.edge_preds.resize(2);
  inst.edge_preds[1].resize(1);
  inst.gold = {0, 0};
  const ParentGraph other = build_chain(3);
  CHECK_THROWS_AS(forward_marginals(models, other, inst), structural_error);
}

TEST_CASE("viterbi at zero weights returns all first labels") {
  Rng rng(1);
  verify::RandomCaseOptions opt;
  opt.chain_only = true;
  verify::RandomCase c = verify::make_random_case(rng, opt);
  ModelSet zero(c.labels, c.models.layout());
  CHECK(viterbi_chain(zero, c.instance) ==
        std::vector<int>(static_cast<std::size_t>(c.instance.graph.n), 0));
}

TEST_CASE("viterbi recovers a planted deterministic sequence") {
  const LabelSet labels({"a", "b"});
  const ParameterLayout layout(2, 3, 1, {EdgeClass::local});
  ModelSet models(labels, layout);
  // Node predicate k at position k forces the pattern (a, b, a) via large
  // node weights; transitions are flat.
  const std::vector<int> target = {0, 1, 0};
  for (int k = 0; k < 3; ++k)
    models.for_class(EdgeClass::local).mu(k, target[static_cast<std::size_t>(k)]) = 50.0;
  FeaturizedInstance inst;
  inst.graph = build_chain(3);
  inst.edge_preds.resize(3);
  for (int k = 0; k < 3; ++k) {
    inst.node_preds.push_back(
        PredicateVector::from_entries({{static_cast<std::int32_t>(k), 1.0}}));
    inst.start_preds.push_back(PredicateVector::from_entries({{0, 1.0}}));
    if (k > 0)
      inst.edge_preds[static_cast<std::size_t>(k)].push_back(
          PredicateVector::from_entries({{0, 1.0}}));
    inst.gold.push_back(target[static_cast<std::size_t>(k)]);
  }
  CHECK(viterbi_chain(models, inst) == target);
}

TEST_CASE("viterbi equals the enumeration argmax on a seeded chain") {
  Rng rng(5);
  verify::RandomCaseOptions opt;
  opt.chain_only = true;
  opt.max_n = 6;
  opt.max_labels = 3;
  for (int rep = 0; rep < 10; ++rep) {
    const verify::RandomCase c = verify::make_random_case(rng, opt);
    CHECK(viterbi_chain(c.models, c.instance) ==
          brute_force_joint_argmax(c.models, c.instance.graph, c.instance));
  }
}

TEST_CASE("viterbi rejects graphs with skip edges") {
  Rng rng(9);
  verify::RandomCaseOptions opt;
  opt.max_n = 6;
  // Force at least one skip edge.
  verify::RandomCase c = verify::make_random_case(rng, opt);
  bool has_skip = false;
  for (int k = 0; k < c.instance.graph.n && !has_skip; ++k)
    for (const ParentEdge& e : c.instance.graph.parents[static_cast<std::size_t>(k)])
      has_skip = has_skip || e.cls == EdgeClass::skip;
  if (!has_skip) {
    c.instance.graph.parents[c.instance.graph.n > 2 ? 2 : 1].push_back({0, EdgeClass::skip});
    c.instance.graph = uniform_alphas(std::move(c.instance.graph));
    c.instance.edge_preds[c.instance.graph.n > 2 ? 2 : 1].push_back(
        verify::random_preds(rng, 9, 2));
  }
  CHECK_THROWS_AS(viterbi_chain(c.models, c.instance), unsupported_error);
}

TEST_CASE("one-hot mixing on local parents reduces to the chain result") {
  Rng rng(23);
  verify::RandomCase c = verify::make_random_case(rng);
  // Re-point all mixing mass at the local parent.
  ParentGraph& g = c.instance.graph;
  for (int k = 0; k < g.n; ++k) {
    auto& plist = g.parents[static_cast<std::size_t>(k)];
    auto& alpha = g.alphas[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < plist.size(); ++i)
      alpha[i] = plist[i].cls == EdgeClass::local ? 1.0 : 0.0;
  }
  const MarginalTable mixture = forward_marginals(c.models, g, c.instance);

  // Strip the skip edges entirely and compare.
  FeaturizedInstance chain_inst;
  chain_inst.graph = build_chain(g.n);
  chain_inst.node_preds = c.instance.node_preds;
  chain_inst.start_preds = c.instance.start_preds;
  chain_inst.gold = c.instance.gold;
  chain_inst.edge_preds.resize(static_cast<std::size_t>(g.n));
  for (int k = 0; k < g.n; ++k)
    for (std::size_t i = 0; i < g.parents[static_cast<std::size_t>(k)].size(); ++i)
      if (g.parents[static_cast<std::size_t>(k)][i].cls == EdgeClass::local)
        chain_inst.edge_preds[static_cast<std::size_t>(k)].push_back(
            c.instance.edge_preds[static_cast<std::size_t>(k)][i]);
  const MarginalTable chain = forward_marginals(c.models, chain_inst.graph, chain_inst);
  CHECK(mixture.max_abs_diff(chain) <= 1e-12);
}

namespace {

PageCollection tiny_pages() {
  PageCollection collection;
  collection.pages = {{"p0", "x", {"alpha", "beta"}},
                      {"p1", "y", {"beta", "gamma"}},
                      {"p2", "x", {"alpha", "gamma"}},
                      {"p3", "y", {"delta"}}};
  collection.links = LinkGraph(4);
  collection.links.add_arc(0, 1);
  collection.links.add_arc(2, 1);
  collection.links.add_arc(3, 2);
  return collection;
}

}  // namespace

TEST_CASE("averaging a single ordering equals the plain forward sweep") {
  const PageCollection collection = tiny_pages();
  const Featurizer fx{TemplateConfig::linked_docs_default()};
  Vocabularies vocabs = build_vocabularies(collection, fx);
  const LabelSet labels = build_label_set(collection);
  const ParameterLayout layout(labels.size(), vocabs.node.size(), vocabs.pair.size(),
                               {EdgeClass::local, EdgeClass::incoming, EdgeClass::outgoing});
  ModelSet models(labels, layout);
  Rng rng(31);
  verify::randomize_weights(models, rng, 1.0);

  const std::uint64_t seed = 77;
  const MarginalTable averaged = averaged_marginals(models, collection, 1, seed, fx, vocabs);
  const std::vector<std::vector<int>> perms = sample_permutations(4, 1, seed);
  const FeaturizedInstance inst = featurize_pages(collection, perms[0], fx, vocabs, nullptr);
  const MarginalTable single = forward_marginals(models, inst.graph, inst);
  for (int k = 0; k < 4; ++k) {
    const int page = perms[0][static_cast<std::size_t>(k)];
    for (int y = 0; y < labels.size(); ++y)
      CHECK(averaged.at(page, y) == doctest::Approx(single.at(k, y)).epsilon(1e-15));
  }
}

TEST_CASE("averaging over a linkless collection is ordering-independent") {
  PageCollection collection = tiny_pages();
  collection.links = LinkGraph(4);  // no hyperlinks at all
  const Featurizer fx{TemplateConfig::linked_docs_default()};
  Vocabularies vocabs = build_vocabularies(collection, fx);
  const LabelSet labels = build_label_set(collection);
  const ParameterLayout layout(labels.size(), vocabs.node.size(), vocabs.pair.size(),
                               {EdgeClass::local});
  ModelSet models(labels, layout);
  Rng rng(33);
  verify::randomize_weights(models, rng, 1.0);
  const MarginalTable many = averaged_marginals(models, collection, 8, 5, fx, vocabs);
  const MarginalTable one = averaged_marginals(models, collection, 1, 9, fx, vocabs);
  CHECK(many.max_abs_diff(one) <= 1e-12);
}

TEST_CASE("averaging is independent of the order of the sampled orderings") {
  const PageCollection collection = tiny_pages();
  const Featurizer fx{TemplateConfig::linked_docs_default()};
  Vocabularies vocabs = build_vocabularies(collection, fx);
  const LabelSet labels = build_label_set(collection);
  const ParameterLayout layout(labels.size(), vocabs.node.size(), vocabs.pair.size(),
                               {EdgeClass::local, EdgeClass::incoming, EdgeClass::outgoing});
  ModelSet models(labels, layout);
  Rng rng(35);
  verify::randomize_weights(models, rng, 1.0);

  std::vector<std::vector<int>> perms = sample_permutations(4, 12, 99);
  const MarginalTable forward_order = averaged_marginals_over(models, collection, perms, fx, vocabs);
  std::reverse(perms.begin(), perms.end());
  const MarginalTable reversed = averaged_marginals_over(models, collection, perms, fx, vocabs);
  CHECK(forward_order.max_abs_diff(reversed) <= 1e-12);
}

TEST_CASE("seeded averaging is bit-identical across runs") {
  const PageCollection collection = tiny_pages();
  const Featurizer fx{TemplateConfig::linked_docs_default()};
  Vocabularies vocabs = build_vocabularies(collection, fx);
  const LabelSet labels = build_label_set(collection);
  const ParameterLayout layout(labels.size(), vocabs.node.size(), vocabs.pair.size(),
                               {EdgeClass::local, EdgeClass::incoming, EdgeClass::outgoing});
  ModelSet models(labels, layout);
  Rng rng(37);
  verify::randomize_weights(models, rng, 1.0);
  const MarginalTable a = averaged_marginals(models, collection, 50, 4242, fx, vocabs);
  const MarginalTable b = averaged_marginals(models, collection, 50, 4242, fx, vocabs);
  CHECK(a.data == b.data);
}
