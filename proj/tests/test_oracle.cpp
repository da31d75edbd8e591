#include <doctest.h>

#include <cmath>

#include "mopmemm/oracle.hpp"
#include "mopmemm/verify.hpp"

using namespace mopmemm;

TEST_CASE("enumeration normalizes to one on random models") {
  Rng rng(41);
  for (int rep = 0; rep < 10; ++rep) {
    const verify::RandomCase c = verify::make_random_case(rng);
    const double total = brute_force_total_probability(c.models, c.instance.graph, c.instance);
    CHECK(std::abs(total - 1.0) <= 1e-10);
  }
}

TEST_CASE("single-node enumeration equals the forward sweep by construction") {
  Rng rng(43);
  verify::RandomCaseOptions opt;
  opt.max_n = 1;
  const verify::RandomCase c = verify::make_random_case(rng, opt);
  const MarginalTable fast = forward_marginals(c.models, c.instance.graph, c.instance);
  const MarginalTable exact = brute_force_marginals(c.models, c.instance.graph, c.instance);
  CHECK(fast.max_abs_diff(exact) == 0.0);
}

TEST_CASE("the enumeration cap refuses oversized instances") {
  const LabelSet labels({"a", "b", "c", "d"});
  const ParameterLayout layout(4, 2, 2, {EdgeClass::local});
  const ModelSet models(labels, layout);
  FeaturizedInstance inst;
  const int n = 13;  // 4^13 > 1e7
  inst.graph = build_chain(n);
  inst.edge_preds.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    inst.node_preds.push_back(PredicateVector::from_entries({{0, 1.0}}));
    inst.start_preds.push_back(PredicateVector::from_entries({{0, 1.0}}));
    if (k > 0)
      inst.edge_preds[static_cast<std::size_t>(k)].push_back(
          PredicateVector::from_entries({{0, 1.0}}));
    inst.gold.push_back(0);
  }
  CHECK_THROWS_AS(brute_force_marginals(models, inst.graph, inst), size_error);
}

TEST_CASE("memm_chain_forward matches the mixture sweep on chains") {
  Rng rng(45);
  verify::RandomCaseOptions opt;
  opt.chain_only = true;
  for (int rep = 0; rep < 10; ++rep) {
    const verify::RandomCase c = verify::make_random_case(rng, opt);
    const MarginalTable a = forward_marginals(c.models, c.instance.graph, c.instance);
    const MarginalTable b = memm_chain_forward(c.models, c.instance);
    CHECK(a.max_abs_diff(b) <= 1e-12);
  }
}

TEST_CASE("finite differences of constant and linear objectives") {
  const std::vector<double> theta = {0.5, -1.0, 2.0};
  const std::vector<std::int64_t> coords = {0, 1, 2};
  const std::vector<double> zero = finite_difference_gradient(
      [](std::span<const double>) { return 3.5; }, theta, 1e-6, coords);
  for (double g : zero) CHECK(std::abs(g) <= 1e-9);

  const std::vector<double> c = {2.0, -3.0, 0.25};
  const std::vector<double> lin = finite_difference_gradient(
      [&](std::span<const double> t) {
        double v = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) v += c[i] * t[i];
        return v;
      },
      theta, 1e-6, coords);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(lin[i] - c[i]) <= 1e-9);

  CHECK_THROWS_AS(finite_difference_gradient(
                      [](std::span<const double>) { return std::nan(""); }, theta, 1e-6, coords),
                  numeric_error);
  CHECK_THROWS_AS(finite_difference_gradient(
                      [](std::span<const double>) { return 0.0; }, theta, 0.0, coords),
                  structural_error);
}

TEST_CASE("the synthetic sampler is deterministic per seed") {
  SyntheticConfig cfg;
  cfg.num_sequences = 20;
  cfg.seed = 123;
  const SyntheticDataset a = generate_synthetic(cfg);
  const SyntheticDataset b = generate_synthetic(cfg);
  REQUIRE(a.docs.size() == b.docs.size());
  for (std::size_t d = 0; d < a.docs.size(); ++d) {
    REQUIRE(a.docs[d].tokens.size() == b.docs[d].tokens.size());
    for (std::size_t k = 0; k < a.docs[d].tokens.size(); ++k) {
      CHECK(a.docs[d].tokens[k].word == b.docs[d].tokens[k].word);
      CHECK(a.docs[d].tokens[k].tag == b.docs[d].tokens[k].tag);
    }
  }
}

TEST_CASE("at copy strength one every repeat group shares its first occurrence's label") {
  SyntheticConfig cfg;
  cfg.num_sequences = 30;
  cfg.copy_strength = 1.0;
  cfg.seed = 7;
  const SyntheticDataset data = generate_synthetic(cfg);
  for (const Document& doc : data.docs) {
    std::unordered_map<std::string, std::string> group_label;
    for (const Token& tok : doc.tokens) {
      if (tok.word.rfind("Ent", 0) != 0) continue;
      auto [it, fresh] = group_label.emplace(tok.word, tok.tag);
      if (!fresh) CHECK(it->second == tok.tag);
    }
  }
}

TEST_CASE("sampler statistics stay within the 3-sigma binomial band") {
  SyntheticConfig cfg;
  cfg.num_sequences = 800;
  cfg.copy_strength = 0.9;
  cfg.seed = 11;
  const SyntheticDataset data = generate_synthetic(cfg);
  REQUIRE(data.copy_rule_draws >= 10000);

  // A copy-rule draw matches its chosen parent with c + (1 - c) / |Y|.
  const double n = static_cast<double>(data.copy_rule_draws);
  const double p = cfg.copy_strength + (1.0 - cfg.copy_strength) / cfg.num_labels;
  const double sigma = std::sqrt(n * p * (1.0 - p));
  CHECK(std::abs(static_cast<double>(data.copy_rule_matches) - n * p) <= 3.0 * sigma);

  // Uniform-rule draws match with probability 1 / |Y|.
  const double nu = static_cast<double>(data.uniform_rule_draws);
  const double pu = 1.0 / cfg.num_labels;
  const double sigma_u = std::sqrt(nu * pu * (1.0 - pu));
  CHECK(std::abs(static_cast<double>(data.uniform_rule_matches) - nu * pu) <= 3.0 * sigma_u);
}

TEST_CASE("synthetic group words are capitalized, document-unique, and linked") {
  SyntheticConfig cfg;
  cfg.num_sequences = 10;
  cfg.seed = 99;
  const SyntheticDataset data = generate_synthetic(cfg);
  int docs_with_skips = 0;
  for (const Document& doc : data.docs) {
    std::vector<std::string> tokens;
    for (const Token& t : doc.tokens) tokens.push_back(t.word);
    const auto df = count_document_frequencies(data.docs);
    const ParentGraph g = build_ner_skip_graph(tokens, df);
    int skips = 0;
    for (int k = 0; k < g.n; ++k)
      for (const ParentEdge& e : g.parents[static_cast<std::size_t>(k)])
        skips += e.cls == EdgeClass::skip ? 1 : 0;
    docs_with_skips += skips > 0 ? 1 : 0;
  }
  CHECK(docs_with_skips >= 8);  // nearly every sequence plants at least one pair
}

TEST_CASE("synthetic config validation") {
  SyntheticConfig bad;
  bad.copy_strength = 1.5;
  CHECK_THROWS_AS(generate_synthetic(bad), usage_error);
  SyntheticConfig sizes;
  sizes.max_length = 5;
  sizes.min_length = 10;
  CHECK_THROWS_AS(generate_synthetic(sizes), usage_error);
}
