// Core types shared by every module: labels, sparse predicate vectors,
// distributions, sparse gradients, error taxonomy, and a reproducible RNG.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mopmemm {

// ---------------------------------------------------------------------------
// Errors. Each failure class gets its own type so callers (and the CLI exit
// codes) can distinguish structural misuse, numeric trouble, and bad data.
// ---------------------------------------------------------------------------

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct structural_error : error {
  using error::error;
};
struct numeric_error : error {
  using error::error;
};
struct unsupported_error : error {
  using error::error;
};
struct size_error : error {
  using error::error;
};
struct optim_error : error {
  using error::error;
};
struct format_error : error {
  using error::error;
};
struct parse_error : error {
  using error::error;
};
struct data_error : error {
  using error::error;
};
struct usage_error : error {
  using error::error;
};

// ---------------------------------------------------------------------------
// LabelSet: ordered distinct label names with dense indices. Index |Y| is
// reserved for the START parent used by parentless nodes; it is never a
// child label.
// ---------------------------------------------------------------------------

class LabelSet {
 public:
  LabelSet() = default;

  explicit LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw structural_error("LabelSet: empty label list");
    for (int i = 0; i < static_cast<int>(names_.size()); ++i) {
      auto [it, fresh] = index_.emplace(names_[i], i);
      (void)it;
      if (!fresh) throw structural_error("LabelSet: duplicate label '" + names_[i] + "'");
    }
  }

  int size() const { return static_cast<int>(names_.size()); }
  // Reserved parent index for the START convention.
  int start_index() const { return size(); }

  const std::string& name(int index) const {
    if (index < 0 || index >= size()) throw structural_error("LabelSet: index out of range");
    return names_[static_cast<std::size_t>(index)];
  }

  // -1 if unknown.
  int find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? -1 : it->second;
  }

  int index(std::string_view name) const {
    int i = find(name);
    if (i < 0) throw format_error("LabelSet: unknown label '" + std::string(name) + "'");
    return i;
  }

  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

// ---------------------------------------------------------------------------
// PredicateVector: sparse map predicate-id -> value, stored as a sorted
// vector. Ids below zero (the unknown-predicate sentinel) and exact zero
// values are dropped on construction.
// ---------------------------------------------------------------------------

struct PredEntry {
  std::int32_t id;
  double value;
};

class PredicateVector {
 public:
  PredicateVector() = default;

  static PredicateVector from_entries(std::vector<PredEntry> raw) {
    std::erase_if(raw, [](const PredEntry& e) { return e.id < 0; });
    std::sort(raw.begin(), raw.end(),
              [](const PredEntry& a, const PredEntry& b) { return a.id < b.id; });
    std::vector<PredEntry> merged;
    merged.reserve(raw.size());
    for (const PredEntry& e : raw) {
      if (!merged.empty() && merged.back().id == e.id)
        merged.back().value += e.value;
      else
        merged.push_back(e);
    }
    std::erase_if(merged, [](const PredEntry& e) { return e.value == 0.0; });
    PredicateVector pv;
    pv.entries_ = std::move(merged);
    return pv;
  }

  const std::vector<PredEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::vector<PredEntry> entries_;
};

// ---------------------------------------------------------------------------
// Distribution over child labels.
// ---------------------------------------------------------------------------

struct Distribution {
  std::vector<double> probs;

  int size() const { return static_cast<int>(probs.size()); }

  double operator[](int i) const { return probs[static_cast<std::size_t>(i)]; }

  // Ties resolve to the lowest label index.
  int argmax() const {
    int best = 0;
    for (int i = 1; i < size(); ++i)
      if (probs[static_cast<std::size_t>(i)] > probs[static_cast<std::size_t>(best)]) best = i;
    return best;
  }

  void validate(double tol = 1e-12) const {
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) throw numeric_error("Distribution: negative or NaN entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol) throw numeric_error("Distribution: does not sum to 1");
  }
};

// ---------------------------------------------------------------------------
// SparseGradient: parameter index -> partial derivative. The flat parameter
// index space is defined by ParameterLayout (model.hpp).
// ---------------------------------------------------------------------------

class SparseGradient {
 public:
  void add(std::int64_t index, double value) {
    if (value == 0.0) return;
    map_[index] += value;
  }

  double at(std::int64_t index) const {
    auto it = map_.find(index);
    return it == map_.end() ? 0.0 : it->second;
  }

  std::size_t size() const { return map_.size(); }

  // Entries in ascending parameter-index order; the deterministic form used
  // for reductions and test comparisons.
  std::vector<std::pair<std::int64_t, double>> sorted() const {
    std::vector<std::pair<std::int64_t, double>> out(map_.begin(), map_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  void accumulate_into(std::vector<double>& dense) const {
    for (const auto& [idx, val] : sorted()) dense[static_cast<std::size_t>(idx)] += val;
  }

  void check_finite() const {
    for (const auto& [idx, val] : map_) {
      (void)idx;
      if (!std::isfinite(val)) throw numeric_error("SparseGradient: non-finite entry");
    }
  }

 private:
  std::unordered_map<std::int64_t, double> map_;
};

// ---------------------------------------------------------------------------
// Rng: mt19937_64 behind hand-rolled draws so results are identical on any
// conforming standard library (std::shuffle and the distributions are
// implementation-defined, so we avoid them).
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  double uniform01() {
    // 53-bit mantissa draw in [0, 1).
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased draw in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw structural_error("Rng::uniform_int: n must be positive");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % un;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return static_cast<int>(x % un);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      int j = uniform_int(i + 1);
      std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
    }
  }

  std::vector<int> permutation(int n) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    shuffle(p);
    return p;
  }

 private:
  std::mt19937_64 eng_;
};

// Numerically safe log-sum-exp over a span of finite scores.
inline double log_sum_exp(std::span<const double> scores) {
  double m = scores[0];
  for (double s : scores) m = std::max(m, s);
  double acc = 0.0;
  for (double s : scores) acc += std::exp(s - m);
  return m + std::log(acc);
}

}  // namespace mopmemm
