#include <doctest.h>

#include "mopmemm/core.hpp"
#include "mopmemm/evaluation.hpp"

using namespace mopmemm;

namespace {

std::vector<std::string> tags(std::initializer_list<const char*> list) {
  return {list.begin(), list.end()};
}

}  // namespace

TEST_CASE("BIO2 span decoding") {
  const auto spans = decode_spans(tags({"B-PER", "I-PER", "O", "B-LOC"}), TagScheme::bio2);
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == EntitySpan{0, 1, "PER"});
  CHECK(spans[1] == EntitySpan{3, 3, "LOC"});

  CHECK(decode_spans(tags({"O", "O", "O"}), TagScheme::bio2).empty());

  // Repair: I after O opens a new span; strict mode drops it.
  const auto repaired = decode_spans(tags({"O", "I-PER"}), TagScheme::bio2);
  REQUIRE(repaired.size() == 1);
  CHECK(repaired[0] == EntitySpan{1, 1, "PER"});
  CHECK(decode_spans(tags({"O", "I-PER"}), TagScheme::bio2, true).empty());

  // I of a different type also opens a new span.
  const auto switched = decode_spans(tags({"B-PER", "I-LOC"}), TagScheme::bio2);
  REQUIRE(switched.size() == 2);
  CHECK(switched[0] == EntitySpan{0, 0, "PER"});
  CHECK(switched[1] == EntitySpan{1, 1, "LOC"});
}

TEST_CASE("IOB1 span decoding") {
  const auto spans = decode_spans(tags({"I-PER", "I-PER", "O", "I-LOC"}), TagScheme::iob1);
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == EntitySpan{0, 1, "PER"});
  CHECK(spans[1] == EntitySpan{3, 3, "LOC"});

  // B splits adjacent same-type entities.
  const auto split = decode_spans(tags({"I-PER", "B-PER", "I-PER"}), TagScheme::iob1);
  REQUIRE(split.size() == 2);
  CHECK(split[0] == EntitySpan{0, 0, "PER"});
  CHECK(split[1] == EntitySpan{1, 2, "PER"});
}

TEST_CASE("unknown tag strings raise format errors") {
  CHECK_THROWS_AS(decode_spans(tags({"X-PER"}), TagScheme::bio2), format_error);
  CHECK_THROWS_AS(decode_spans(tags({"B_PER"}), TagScheme::bio2), format_error);
  CHECK(decode_spans(tags({"anything"}), TagScheme::raw).empty());
}

TEST_CASE("encode/decode round-trips well-formed span sets under BIO2") {
  Rng rng(71);
  for (int rep = 0; rep < 50; ++rep) {
    const int length = 5 + rng.uniform_int(15);
    std::vector<EntitySpan> spans;
    int pos = 0;
    const std::vector<std::string> types = {"PER", "LOC", "ORG"};
    while (pos < length) {
      if (rng.uniform01() < 0.4) {
        const int len = 1 + rng.uniform_int(3);
        const int end = std::min(length - 1, pos + len - 1);
        spans.push_back({pos, end, types[static_cast<std::size_t>(rng.uniform_int(3))]});
        pos = end + 1;
      } else {
        ++pos;
      }
    }
    const std::vector<std::string> encoded = encode_spans(spans, length, TagScheme::bio2);
    CHECK(decode_spans(encoded, TagScheme::bio2) == spans);
  }
}

TEST_CASE("IOB1 encoding round-trips including adjacent same-type spans") {
  const std::vector<EntitySpan> spans = {{0, 0, "PER"}, {1, 2, "PER"}, {4, 4, "LOC"}};
  const std::vector<std::string> encoded = encode_spans(spans, 5, TagScheme::iob1);
  CHECK(encoded == tags({"I-PER", "B-PER", "I-PER", "O", "I-LOC"}));
  CHECK(decode_spans(encoded, TagScheme::iob1) == spans);
}

TEST_CASE("entity_prf on identical span sets is perfect") {
  const std::vector<EntitySpan> spans = {{0, 1, "PER"}, {3, 3, "LOC"}};
  const ScoreReport r = entity_prf(spans, spans);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == 1.0);
  CHECK(r.fp_rate == 0.0);
  CHECK(r.fn_rate == 0.0);
}

TEST_CASE("entity_prf scores exact (start, end, type) matches only") {
  const std::vector<EntitySpan> gold = {{1, 2, "PER"}, {5, 5, "LOC"}};
  const std::vector<EntitySpan> pred = {{1, 2, "PER"}, {5, 5, "ORG"}};
  const ScoreReport r = entity_prf(gold, pred);
  CHECK(r.precision == doctest::Approx(0.5));
  CHECK(r.recall == doctest::Approx(0.5));
  CHECK(r.f1 == doctest::Approx(0.5));
  CHECK(r.per_type.at("PER").correct == 1);
  CHECK(r.per_type.at("LOC").gold == 1);
  CHECK(r.per_type.at("ORG").predicted == 1);
}

TEST_CASE("degenerate entity_prf cases are flagged") {
  const std::vector<EntitySpan> gold = {{0, 0, "PER"}};
  const ScoreReport r = entity_prf(gold, {});
  CHECK(r.precision == 0.0);
  CHECK(r.degenerate_precision);
  CHECK(r.recall == 0.0);
  CHECK(r.f1 == 0.0);
  CHECK(r.fn_rate == 1.0);
  CHECK_FALSE(r.degenerate_recall);
}

TEST_CASE("entity_prf is symmetric under swapping gold and predictions") {
  Rng rng(73);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<EntitySpan> a, b;
    const std::vector<std::string> types = {"PER", "LOC"};
    for (int i = 0; i < 5; ++i) {
      const int s = rng.uniform_int(20);
      a.push_back({s, s + rng.uniform_int(3), types[static_cast<std::size_t>(rng.uniform_int(2))]});
      const int t = rng.uniform_int(20);
      b.push_back({t, t + rng.uniform_int(3), types[static_cast<std::size_t>(rng.uniform_int(2))]});
    }
    const ScoreReport fwd = entity_prf(a, b);
    const ScoreReport rev = entity_prf(b, a);
    CHECK(fwd.precision == doctest::Approx(rev.recall));
    CHECK(fwd.recall == doctest::Approx(rev.precision));
    CHECK(fwd.fp_rate == doctest::Approx(rev.fn_rate));
    CHECK(fwd.fn_rate == doctest::Approx(rev.fp_rate));
    CHECK(fwd.f1 == doctest::Approx(rev.f1));
    // F1 is the harmonic mean, pinned between min and max of P and R.
    if (fwd.precision + fwd.recall > 0) {
      const double recomputed = 2 * fwd.precision * fwd.recall / (fwd.precision + fwd.recall);
      CHECK(fwd.f1 == doctest::Approx(recomputed));
      CHECK(fwd.f1 >= std::min(fwd.precision, fwd.recall) - 1e-12);
      CHECK(fwd.f1 <= std::max(fwd.precision, fwd.recall) + 1e-12);
    }
  }
}

TEST_CASE("EntityScorer accumulates across sequences with token accuracy") {
  EntityScorer scorer(TagScheme::bio2);
  scorer.add(tags({"B-PER", "I-PER", "O"}), tags({"B-PER", "I-PER", "O"}));
  scorer.add(tags({"O", "B-LOC"}), tags({"O", "B-ORG"}));
  const ScoreReport r = scorer.report();
  CHECK(r.gold_entities == 2);
  CHECK(r.predicted_entities == 2);
  CHECK(r.correct_entities == 1);
  CHECK(r.tokens == 5);
  CHECK(r.correct_tokens == 4);
  CHECK(r.token_accuracy == doctest::Approx(0.8));
  CHECK_THROWS_AS(scorer.add(tags({"O"}), tags({"O", "O"})), structural_error);
}

TEST_CASE("classification_error counts mismatches") {
  const std::vector<int> gold = {0, 1, 2, 1};
  CHECK(classification_error(gold, gold) == 0.0);
  const std::vector<int> all_wrong = {1, 2, 0, 2};
  CHECK(classification_error(gold, all_wrong) == 1.0);
  const std::vector<int> one_wrong = {0, 1, 2, 2};
  CHECK(classification_error(gold, one_wrong) == doctest::Approx(0.25));
  const std::vector<int> short_pred = {0, 1};
  CHECK_THROWS_AS(classification_error(gold, short_pred), structural_error);
}
