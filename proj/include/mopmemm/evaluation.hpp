// Entity-level scoring (exact-match spans, CoNLL convention), token
// accuracy, and page-classification error.
#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mopmemm/core.hpp"

namespace mopmemm {

enum class TagScheme { iob1, bio2, raw };

inline std::string_view to_string(TagScheme s) {
  switch (s) {
    case TagScheme::iob1: return "iob1";
    case TagScheme::bio2: return "bio2";
    case TagScheme::raw: return "raw";
  }
  throw structural_error("bad tag scheme");
}

inline TagScheme tag_scheme_from_string(std::string_view s) {
  if (s == "iob1") return TagScheme::iob1;
  if (s == "bio2") return TagScheme::bio2;
  if (s == "raw") return TagScheme::raw;
  throw usage_error("unknown tag scheme '" + std::string(s) + "'");
}

struct EntitySpan {
  int start;  // inclusive
  int end;    // inclusive
  std::string type;

  auto operator<=>(const EntitySpan&) const = default;
};

namespace detail {

struct ParsedTag {
  char marker;       // 'O', 'B', or 'I'
  std::string type;  // empty for O
};

inline ParsedTag parse_tag(const std::string& tag) {
  if (tag == "O") return {'O', ""};
  if (tag.size() >= 3 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-')
    return {tag[0], tag.substr(2)};
  throw format_error("malformed tag '" + tag + "'");
}

}  // namespace detail

// Maximal same-type contiguous spans. Under the repair convention an I-tag
// that cannot continue the previous span opens a new one; strict mode treats
// such tags as O instead. Raw-scheme sequences have no spans.
inline std::vector<EntitySpan> decode_spans(std::span<const std::string> tags, TagScheme scheme,
                                            bool strict = false) {
  std::vector<EntitySpan> spans;
  if (scheme == TagScheme::raw) return spans;
  int open_start = -1;
  std::string open_type;
  auto close = [&](int end) {
    if (open_start >= 0) spans.push_back({open_start, end, open_type});
    open_start = -1;
    open_type.clear();
  };
  for (int k = 0; k < static_cast<int>(tags.size()); ++k) {
    const detail::ParsedTag t = detail::parse_tag(tags[static_cast<std::size_t>(k)]);
    if (t.marker == 'O') {
      close(k - 1);
      continue;
    }
    const bool continuing = open_start >= 0 && open_type == t.type;
    if (t.marker == 'I') {
      if (continuing) continue;
      // IOB1 I-tags legitimately open spans; under BIO2 this is the repair.
      if (scheme == TagScheme::bio2 && strict && !continuing) {
        close(k - 1);
        continue;
      }
      close(k - 1);
      open_start = k;
      open_type = t.type;
      continue;
    }
    // B tag: starts a new span. In IOB1 it is only well formed directly
    // after a same-type entity; elsewhere strict mode drops it.
    if (scheme == TagScheme::iob1 && strict && !continuing) {
      close(k - 1);
      continue;
    }
    close(k - 1);
    open_start = k;
    open_type = t.type;
  }
  close(static_cast<int>(tags.size()) - 1);
  return spans;
}

// Inverse of decode_spans for well-formed, sorted, non-overlapping spans.
inline std::vector<std::string> encode_spans(std::span<const EntitySpan> spans, int length,
                                             TagScheme scheme) {
  std::vector<std::string> tags(static_cast<std::size_t>(length), "O");
  const EntitySpan* prev = nullptr;
  for (const EntitySpan& s : spans) {
    if (s.start < 0 || s.end >= length || s.start > s.end)
      throw structural_error("encode_spans: span out of range");
    for (int k = s.start; k <= s.end; ++k) tags[static_cast<std::size_t>(k)] = "I-" + s.type;
    if (scheme == TagScheme::bio2) {
      tags[static_cast<std::size_t>(s.start)] = "B-" + s.type;
    } else {
      // IOB1 marks B only when the same type abuts the previous span.
      const bool abuts = prev && prev->end == s.start - 1 && prev->type == s.type;
      if (abuts) tags[static_cast<std::size_t>(s.start)] = "B-" + s.type;
    }
    prev = &s;
  }
  return tags;
}

struct TypeScore {
  long gold = 0;
  long predicted = 0;
  long correct = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ScoreReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  double token_accuracy = 0.0;
  long gold_entities = 0;
  long predicted_entities = 0;
  long correct_entities = 0;
  long tokens = 0;
  long correct_tokens = 0;
  bool degenerate_precision = false;  // no predicted entities
  bool degenerate_recall = false;     // no gold entities
  std::map<std::string, TypeScore> per_type;
};

namespace detail {

inline long count_exact_matches(std::vector<EntitySpan> gold, std::vector<EntitySpan> pred) {
  std::sort(gold.begin(), gold.end());
  std::sort(pred.begin(), pred.end());
  long matches = 0;
  std::size_t i = 0, j = 0;
  while (i < gold.size() && j < pred.size()) {
    if (gold[i] == pred[j]) {
      ++matches;
      ++i;
      ++j;
    } else if (gold[i] < pred[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return matches;
}

inline void finalize_rates(ScoreReport& r) {
  r.degenerate_precision = r.predicted_entities == 0;
  r.degenerate_recall = r.gold_entities == 0;
  r.precision = r.degenerate_precision
                    ? 0.0
                    : static_cast<double>(r.correct_entities) / static_cast<double>(r.predicted_entities);
  r.recall = r.degenerate_recall
                 ? 0.0
                 : static_cast<double>(r.correct_entities) / static_cast<double>(r.gold_entities);
  r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
                                        : 0.0;
  r.fp_rate = r.degenerate_precision ? 0.0 : 1.0 - r.precision;
  r.fn_rate = r.degenerate_recall ? 0.0 : 1.0 - r.recall;
  r.token_accuracy =
      r.tokens == 0 ? 0.0 : static_cast<double>(r.correct_tokens) / static_cast<double>(r.tokens);
  for (auto& [type, ts] : r.per_type) {
    (void)type;
    ts.precision = ts.predicted == 0 ? 0.0 : static_cast<double>(ts.correct) / static_cast<double>(ts.predicted);
    ts.recall = ts.gold == 0 ? 0.0 : static_cast<double>(ts.correct) / static_cast<double>(ts.gold);
    ts.f1 = (ts.precision + ts.recall) > 0.0
                ? 2.0 * ts.precision * ts.recall / (ts.precision + ts.recall)
                : 0.0;
  }
}

}  // namespace detail

// Span-level precision/recall/F1 with false-positive and false-negative
// rates. A predicted span counts iff (start, end, type) match exactly.
inline ScoreReport entity_prf(std::span<const EntitySpan> gold_spans,
                              std::span<const EntitySpan> pred_spans) {
  ScoreReport r;
  r.gold_entities = static_cast<long>(gold_spans.size());
  r.predicted_entities = static_cast<long>(pred_spans.size());
  std::vector<EntitySpan> gold(gold_spans.begin(), gold_spans.end());
  std::vector<EntitySpan> pred(pred_spans.begin(), pred_spans.end());
  r.correct_entities = detail::count_exact_matches(gold, pred);
  for (const EntitySpan& s : gold) ++r.per_type[s.type].gold;
  for (const EntitySpan& s : pred) ++r.per_type[s.type].predicted;
  // Per-type exact matches.
  for (auto& [type, ts] : r.per_type) {
    std::vector<EntitySpan> g, p;
    for (const EntitySpan& s : gold)
      if (s.type == type) g.push_back(s);
    for (const EntitySpan& s : pred)
      if (s.type == type) p.push_back(s);
    ts.correct = detail::count_exact_matches(std::move(g), std::move(p));
  }
  detail::finalize_rates(r);
  return r;
}

// Corpus-level scorer: feed gold/predicted tag sequences, read the report.
class EntityScorer {
 public:
  explicit EntityScorer(TagScheme scheme, bool strict = false)
      : scheme_(scheme), strict_(strict) {}

  void add(std::span<const std::string> gold_tags, std::span<const std::string> pred_tags) {
    if (gold_tags.size() != pred_tags.size())
      throw structural_error("EntityScorer: sequence length mismatch");
    report_.tokens += static_cast<long>(gold_tags.size());
    for (std::size_t k = 0; k < gold_tags.size(); ++k)
      if (gold_tags[k] == pred_tags[k]) ++report_.correct_tokens;
    if (scheme_ == TagScheme::raw) return;
    const std::vector<EntitySpan> gold = decode_spans(gold_tags, scheme_, strict_);
    const std::vector<EntitySpan> pred = decode_spans(pred_tags, scheme_, strict_);
    report_.gold_entities += static_cast<long>(gold.size());
    report_.predicted_entities += static_cast<long>(pred.size());
    report_.correct_entities += detail::count_exact_matches(gold, pred);
    for (const EntitySpan& s : gold) ++report_.per_type[s.type].gold;
    for (const EntitySpan& s : pred) ++report_.per_type[s.type].predicted;
    for (auto& [type, ts] : report_.per_type) {
      std::vector<EntitySpan> g, p;
      for (const EntitySpan& s : gold)
        if (s.type == type) g.push_back(s);
      for (const EntitySpan& s : pred)
        if (s.type == type) p.push_back(s);
      ts.correct += detail::count_exact_matches(std::move(g), std::move(p));
    }
  }

  ScoreReport report() const {
    ScoreReport r = report_;
    detail::finalize_rates(r);
    return r;
  }

 private:
  TagScheme scheme_;
  bool strict_;
  ScoreReport report_;
};

// Fraction of positions whose labels disagree.
inline double classification_error(std::span<const int> gold, std::span<const int> predicted) {
  if (gold.size() != predicted.size())
    throw structural_error("classification_error: length mismatch");
  if (gold.empty()) return 0.0;
  long wrong = 0;
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (gold[i] != predicted[i]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(gold.size());
}

inline double classification_error(std::span<const std::string> gold,
                                   std::span<const std::string> predicted) {
  if (gold.size() != predicted.size())
    throw structural_error("classification_error: length mismatch");
  if (gold.empty()) return 0.0;
  long wrong = 0;
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (gold[i] != predicted[i]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(gold.size());
}

}  // namespace mopmemm
