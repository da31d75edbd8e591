#include <doctest.h>

#include "mopmemm/graph.hpp"

using namespace mopmemm;

TEST_CASE("build_chain shapes") {
  const ParentGraph g1 = build_chain(1);
  CHECK(g1.num_edges() == 0);
  g1.validate();

  const ParentGraph g3 = build_chain(3);
  REQUIRE(g3.parents[1].size() == 1);
  CHECK(g3.parents[1][0].parent == 0);
  CHECK(g3.parents[1][0].cls == EdgeClass::local);
  REQUIRE(g3.parents[2].size() == 1);
  CHECK(g3.parents[2][0].parent == 1);
  CHECK(g3.alphas[1][0] == 1.0);
  g3.validate();

  const ParentGraph big = build_chain(1000);
  CHECK(big.num_edges() == 999);
  for (int k = 1; k < big.n; ++k) CHECK(big.parents[static_cast<std::size_t>(k)][0].cls == EdgeClass::local);

  CHECK_THROWS_AS(build_chain(0), structural_error);
}

TEST_CASE("uniform_alphas splits mass evenly") {
  ParentGraph g = build_chain(3);
  g.parents[2].push_back({0, EdgeClass::skip});
  g.parents[2].push_back({1, EdgeClass::skip});
  g.parents[2].push_back({0, EdgeClass::local});  // second class on same parent is allowed
  g = uniform_alphas(std::move(g));
  CHECK(g.alphas[0].empty());
  REQUIRE(g.alphas[1].size() == 1);
  CHECK(g.alphas[1][0] == 1.0);
  REQUIRE(g.alphas[2].size() == 4);
  for (double a : g.alphas[2]) CHECK(a == doctest::Approx(0.25));
  g.validate();
}

TEST_CASE("build_ner_skip_graph with no repeated capitalized word is a chain") {
  const std::vector<std::string> tokens = {"The", "cat", "sat", "on", "the", "mat"};
  std::unordered_map<std::string, int> df;
  for (const auto& t : tokens) df[t] = 1;
  const ParentGraph g = build_ner_skip_graph(tokens, df);
  const ParentGraph chain = build_chain(static_cast<int>(tokens.size()));
  REQUIRE(g.num_edges() == chain.num_edges());
  for (int k = 0; k < g.n; ++k)
    for (std::size_t i = 0; i < g.parents[static_cast<std::size_t>(k)].size(); ++i)
      CHECK(g.parents[static_cast<std::size_t>(k)][i].cls == EdgeClass::local);
}

TEST_CASE("recency cap keeps the five most recent occurrences") {
  // Occurrences of one capitalized word at 2, 10, 15, 20, 25, 30, 35, 40;
  // position 40 connects back to the 5 most recent plus its local parent.
  const std::vector<int> positions = {2, 10, 15, 20, 25, 30, 35, 40};
  std::vector<std::string> tokens(41, "x");
  for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i] = "w" + std::to_string(i);
  for (int p : positions) tokens[static_cast<std::size_t>(p)] = "Washington";
  std::unordered_map<std::string, int> df;
  for (const auto& t : tokens) df[t] = 1;
  const ParentGraph g = build_ner_skip_graph(tokens, df, 100, 5);

  std::vector<int> skip_parents;
  bool has_local = false;
  for (const ParentEdge& e : g.parents[40]) {
    if (e.cls == EdgeClass::skip)
      skip_parents.push_back(e.parent);
    else
      has_local = has_local || e.parent == 39;
  }
  CHECK(has_local);
  CHECK(skip_parents == std::vector<int>{15, 20, 25, 30, 35});
  // Every node has at most 1 + r parents.
  for (int k = 0; k < g.n; ++k)
    CHECK(g.parents[static_cast<std::size_t>(k)].size() <= 6);
  g.validate();
}

TEST_CASE("document-frequency cutoff suppresses skip edges") {
  std::vector<std::string> tokens = {"a", "Common", "b", "Common", "c"};
  std::unordered_map<std::string, int> df{{"a", 1}, {"b", 1}, {"c", 1}, {"Common", 150}};
  const ParentGraph g = build_ner_skip_graph(tokens, df, 100, 5);
  CHECK(g.num_edges() == 4);  // chain only
  df["Common"] = 100;         // at the cutoff: df <= max_df keeps the word
  const ParentGraph g2 = build_ner_skip_graph(tokens, df, 100, 5);
  CHECK(g2.num_edges() == 5);
}

TEST_CASE("build_ner_skip_graph rejects empty input and bad parameters") {
  std::unordered_map<std::string, int> df;
  CHECK_THROWS_AS(build_ner_skip_graph({}, df), structural_error);
  CHECK_THROWS_AS(build_ner_skip_graph({"A"}, df, -1, 5), structural_error);
  CHECK_THROWS_AS(build_ner_skip_graph({"A"}, df, 100, 0), structural_error);
}

TEST_CASE("LinkGraph rejects self-loops and collapses duplicates") {
  LinkGraph links(3);
  CHECK(links.add_arc(0, 1));
  CHECK_FALSE(links.add_arc(0, 1));
  CHECK(links.add_arc(1, 0));
  CHECK_THROWS_AS(links.add_arc(2, 2), structural_error);
  CHECK_THROWS_AS(links.add_arc(0, 7), structural_error);
  CHECK(links.arcs().size() == 2);
}

TEST_CASE("build_link_dag follows the ordering rule for edge classes") {
  LinkGraph links(2);
  links.add_arc(0, 1);  // hyperlink A -> B

  // Ordering (A, B): A earlier, hyperlink points earlier -> later: incoming.
  const ParentGraph fwd = build_link_dag(links, {0, 1});
  REQUIRE(fwd.parents[1].size() == 1);
  CHECK(fwd.parents[1][0].parent == 0);
  CHECK(fwd.parents[1][0].cls == EdgeClass::incoming);

  // Ordering (B, A): B earlier, hyperlink points later -> earlier: outgoing.
  const ParentGraph rev = build_link_dag(links, {1, 0});
  REQUIRE(rev.parents[1].size() == 1);
  CHECK(rev.parents[1][0].parent == 0);
  CHECK(rev.parents[1][0].cls == EdgeClass::outgoing);
}

TEST_CASE("a two-page hyperlink cycle yields two parallel model edges") {
  LinkGraph links(2);
  links.add_arc(0, 1);
  links.add_arc(1, 0);
  for (const std::vector<int>& perm : {std::vector<int>{0, 1}, std::vector<int>{1, 0}}) {
    const ParentGraph g = build_link_dag(links, perm);
    g.validate();
    REQUIRE(g.parents[1].size() == 2);
    CHECK(g.parents[1][0].parent == 0);
    CHECK(g.parents[1][1].parent == 0);
    const bool classes_ok =
        (g.parents[1][0].cls == EdgeClass::incoming && g.parents[1][1].cls == EdgeClass::outgoing) ||
        (g.parents[1][0].cls == EdgeClass::outgoing && g.parents[1][1].cls == EdgeClass::incoming);
    CHECK(classes_ok);
    for (double a : g.alphas[1]) CHECK(a == doctest::Approx(0.5));
  }
}

TEST_CASE("build_link_dag rejects non-bijective permutations") {
  LinkGraph links(3);
  links.add_arc(0, 1);
  CHECK_THROWS_AS(build_link_dag(links, {0, 0, 1}), structural_error);
  CHECK_THROWS_AS(build_link_dag(links, {0, 1}), structural_error);
}

TEST_CASE("link DAG edge count equals hyperlink count on random graphs") {
  Rng rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 5 + rng.uniform_int(20);
    LinkGraph links(n);
    int want = 2 * n;
    while (want > 0) {
      const int s = rng.uniform_int(n);
      const int t = rng.uniform_int(n);
      if (s == t) {
        --want;
        continue;
      }
      links.add_arc(s, t);
      --want;
    }
    const ParentGraph g = build_link_dag(links, rng.permutation(n));
    g.validate();
    CHECK(g.num_edges() == static_cast<int>(links.arcs().size()));
  }
}

TEST_CASE("ParentGraph validation catches malformed structures") {
  ParentGraph g = build_chain(3);
  g.alphas[2][0] = 0.5;  // breaks the simplex
  CHECK_THROWS_AS(g.validate(), structural_error);

  ParentGraph fwd = build_chain(3);
  fwd.parents[1][0].parent = 2;  // forward edge
  CHECK_THROWS_AS(fwd.validate(), structural_error);

  ParentGraph dup = build_chain(3);
  dup.parents[2].push_back({1, EdgeClass::local});
  dup.alphas[2] = {0.5, 0.5};
  CHECK_THROWS_AS(dup.validate(), structural_error);
}
