#pragma once

// Corpus BLEU with effective reference length, and the add-one smoothed
// sentence-level variants used as pairwise training targets.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lengthtune/corpus.hpp"

namespace lengthtune {

inline constexpr int kMaxOrder = 4;

// Additive sufficient statistics. match/total are indexed by order - 1.
struct BleuStats {
  std::array<std::int64_t, kMaxOrder> match{};
  std::array<std::int64_t, kMaxOrder> total{};
  std::int64_t hyp_len = 0;
  std::int64_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& o);
  BleuStats& operator-=(const BleuStats& o);
  friend BleuStats operator+(BleuStats a, const BleuStats& b) { return a += b; }
  friend BleuStats operator-(BleuStats a, const BleuStats& b) { return a -= b; }
  friend bool operator==(const BleuStats&, const BleuStats&) = default;
};

enum class Smoothing {
  None,               // corpus level only
  PlusOne,            // add-one on orders 2..4
  PlusOneBp,          // PlusOne, brevity penalty against r - 1
  PlusOneBpGrounded,  // PlusOneBp, add-one on unigrams too
};

Smoothing parse_smoothing(std::string_view name);
std::string_view smoothing_name(Smoothing s);

// Which reference length wins when two are equally close to the hypothesis.
enum class RefLengthTie { Shorter, Longer };

std::int64_t clipped_matches(std::span<const std::string> hyp, std::span<const Tokens> refs, int n);

std::int64_t effective_ref_length(std::int64_t hyp_len, std::span<const std::int64_t> ref_lengths,
                                  RefLengthTie tie = RefLengthTie::Shorter);

// 1 when c >= r, exp(1 - r/c) otherwise, 0 for c == 0.
double brevity_penalty(std::int64_t c, std::int64_t r);

double corpus_bleu(const BleuStats& stats);

double sentence_bleu(const BleuStats& stats, Smoothing scheme);

// Per-order precisions as used by corpus_bleu (0 when total is 0).
std::array<double, kMaxOrder> precisions(const BleuStats& stats);

// Maximum per-reference n-gram counts for one segment, built once and reused
// for every candidate of that segment.
class ReferenceSet {
 public:
  explicit ReferenceSet(std::vector<Tokens> references, RefLengthTie tie = RefLengthTie::Shorter);

  BleuStats stats(std::span<const std::string> hyp) const;
  const std::vector<Tokens>& references() const { return references_; }
  const std::vector<std::int64_t>& lengths() const { return lengths_; }
  RefLengthTie tie() const { return tie_; }

 private:
  std::vector<Tokens> references_;
  std::vector<std::int64_t> lengths_;
  RefLengthTie tie_;
  std::array<std::unordered_map<std::string, std::int64_t>, kMaxOrder> max_counts_;
};

BleuStats compute_stats(std::span<const std::string> hyp, std::span<const Tokens> refs,
                        RefLengthTie tie = RefLengthTie::Shorter);

double sentence_bleu(std::span<const std::string> hyp, std::span<const Tokens> refs,
                     Smoothing scheme);

}  // namespace lengthtune
