#pragma once

// Segments, reference sets, n-best lists and the named feature/weight
// vectors of the log-linear model, plus their text formats.

#include <cmath>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lengthtune/error.hpp"

namespace lengthtune {

using Tokens = std::vector<std::string>;

Tokens tokenize(std::string_view line);
std::string join(const Tokens& tokens);

// Ordered map from feature name to a finite value. Iteration order is the
// sorted name order, which is also the summation order of dot products.
template <class Tag>
class NamedValues {
 public:
  using Map = std::map<std::string, double, std::less<>>;

  NamedValues() = default;
  NamedValues(std::initializer_list<std::pair<const std::string, double>> init) {
    for (const auto& [name, value] : init) set(name, value);
  }
  explicit NamedValues(const Map& values) {
    for (const auto& [name, value] : values) set(name, value);
  }

  void set(std::string_view name, double value) {
    if (!std::isfinite(value))
      throw Error("non-finite value for feature '" + std::string(name) + "'");
    auto it = values_.find(name);
    if (it == values_.end())
      values_.emplace(std::string(name), value);
    else
      it->second = value;
  }

  double at(std::string_view name) const {
    auto it = values_.find(name);
    if (it == values_.end())
      throw FeatureMismatch("unknown feature '" + std::string(name) + "'");
    return it->second;
  }

  bool contains(std::string_view name) const { return values_.find(name) != values_.end(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  const Map& entries() const { return values_; }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(values_.size());
    for (const auto& kv : values_) out.push_back(kv.first);
    return out;
  }

  template <class OtherTag>
  bool same_names(const NamedValues<OtherTag>& other) const {
    if (size() != other.size()) return false;
    auto a = values_.begin();
    auto b = other.entries().begin();
    for (; a != values_.end(); ++a, ++b)
      if (a->first != b->first) return false;
    return true;
  }

  NamedValues scaled(double factor) const {
    NamedValues out = *this;
    for (auto& kv : out.values_) kv.second *= factor;
    return out;
  }

  friend bool operator==(const NamedValues&, const NamedValues&) = default;

 private:
  Map values_;
};

using FeatureVector = NamedValues<struct FeatureTag>;
using WeightVector = NamedValues<struct WeightTag>;

// Sum over features in sorted-name order. Throws FeatureMismatch when the
// name sets differ.
double dot(const WeightVector& weights, const FeatureVector& features);

// max_i |a_i - b_i|; name sets must match.
double max_abs_difference(const WeightVector& a, const WeightVector& b);

struct Segment {
  std::size_t id = 0;
  Tokens source;
  std::vector<Tokens> references;
};

struct Hypothesis {
  std::size_t segment_id = 0;
  Tokens tokens;
  FeatureVector features;

  friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

struct NBestList {
  std::size_t segment_id = 0;
  std::vector<Hypothesis> hypotheses;

  // Appends hypotheses not already present (same tokens and features).
  // Returns the number added.
  std::size_t merge(const NBestList& other);
};

// Checks the dataset-level invariants: at least one source token, non-empty
// references, identical reference count on every segment.
void validate_segments(const std::vector<Segment>& segments);

// N-best text format: `SEGID ||| tokens ||| name=value ... [||| total]`.
// Lists come back ordered by segment id; within a segment the input order is
// kept and duplicate hypotheses are dropped.
std::vector<NBestList> parse_nbest(std::istream& in);
void write_nbest(std::ostream& out, const std::vector<NBestList>& lists);

// One stream per reference; line i of every stream belongs to segment i.
std::vector<std::vector<Tokens>> parse_references(const std::vector<std::istream*>& streams);

// One tokenized sentence per line; empty lines are allowed.
std::vector<Tokens> parse_plain(std::istream& in);

// Pairs a source stream with reference streams into validated segments.
std::vector<Segment> read_segments(std::istream& source,
                                   const std::vector<std::istream*>& references);

// Weight files hold `name value` per line; blank lines and `#` comments are
// skipped.
WeightVector parse_weights(std::istream& in);
void write_weights(std::ostream& out, const WeightVector& weights);

// Deterministic shortest round-trip text for a double.
std::string format_double(double value);

// Index of the best-scoring hypothesis; ties go to the lowest index.
std::size_t rerank_index(const NBestList& nbest, const WeightVector& weights);
const Hypothesis& rerank(const NBestList& nbest, const WeightVector& weights);

}  // namespace lengthtune
