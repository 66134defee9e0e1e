#include "lengthtune/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace lengthtune {

namespace {

std::string ngram_key(std::span<const std::string> tokens, std::size_t start, int n) {
  // Tokens never contain whitespace, so a space separator is unambiguous.
  std::string key = tokens[start];
  for (int k = 1; k < n; ++k) {
    key.push_back(' ');
    key += tokens[start + k];
  }
  return key;
}

std::unordered_map<std::string, std::int64_t> count_ngrams(std::span<const std::string> tokens, int n) {
  std::unordered_map<std::string, std::int64_t> counts;
  if (tokens.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++counts[ngram_key(tokens, i, n)];
  return counts;
}

void check_order(int n) {
  if (n < 1 || n > kMaxOrder) throw Error("n-gram order must be in 1..4, got " + std::to_string(n));
}

std::int64_t ngram_total(std::int64_t len, int n) { return std::max<std::int64_t>(0, len - n + 1); }

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (int n = 0; n < kMaxOrder; ++n) {
    match[n] += o.match[n];
    total[n] += o.total[n];
  }
  hyp_len += o.hyp_len;
  ref_len += o.ref_len;
  return *this;
}

BleuStats& BleuStats::operator-=(const BleuStats& o) {
  for (int n = 0; n < kMaxOrder; ++n) {
    match[n] -= o.match[n];
    total[n] -= o.total[n];
  }
  hyp_len -= o.hyp_len;
  ref_len -= o.ref_len;
  return *this;
}

Smoothing parse_smoothing(std::string_view name) {
  if (name == "none") return Smoothing::None;
  if (name == "plus1") return Smoothing::PlusOne;
  if (name == "plus1-bp") return Smoothing::PlusOneBp;
  if (name == "plus1-bp-grounded") return Smoothing::PlusOneBpGrounded;
  throw Error("unknown smoothing scheme '" + std::string(name) + "'");
}

std::string_view smoothing_name(Smoothing s) {
  switch (s) {
    case Smoothing::None: return "none";
    case Smoothing::PlusOne: return "plus1";
    case Smoothing::PlusOneBp: return "plus1-bp";
    case Smoothing::PlusOneBpGrounded: return "plus1-bp-grounded";
  }
  return "none";
}

std::int64_t clipped_matches(std::span<const std::string> hyp, std::span<const Tokens> refs, int n) {
  check_order(n);
  auto hyp_counts = count_ngrams(hyp, n);
  std::unordered_map<std::string, std::int64_t> max_ref;
  for (const auto& ref : refs)
    for (const auto& [gram, count] : count_ngrams(ref, n)) {
      auto& slot = max_ref[gram];
      slot = std::max(slot, count);
    }
  std::int64_t sum = 0;
  for (const auto& [gram, count] : hyp_counts) {
    auto it = max_ref.find(gram);
    if (it != max_ref.end()) sum += std::min(count, it->second);
  }
  return sum;
}

std::int64_t effective_ref_length(std::int64_t hyp_len, std::span<const std::int64_t> ref_lengths,
                                  RefLengthTie tie) {
  if (ref_lengths.empty()) throw Error("effective_ref_length needs at least one reference");
  std::int64_t best = ref_lengths[0];
  for (std::int64_t r : ref_lengths.subspan(1)) {
    std::int64_t d = std::llabs(hyp_len - r);
    std::int64_t d_best = std::llabs(hyp_len - best);
    if (d < d_best || (d == d_best && (tie == RefLengthTie::Shorter ? r < best : r > best))) best = r;
  }
  return best;
}

double brevity_penalty(std::int64_t c, std::int64_t r) {
  if (c <= 0) return 0.0;
  if (c >= r) return 1.0;
  return std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
}

std::array<double, kMaxOrder> precisions(const BleuStats& stats) {
  std::array<double, kMaxOrder> p{};
  for (int n = 0; n < kMaxOrder; ++n)
    p[n] = stats.total[n] > 0 ? static_cast<double>(stats.match[n]) / static_cast<double>(stats.total[n]) : 0.0;
  return p;
}

double corpus_bleu(const BleuStats& stats) {
  if (stats.hyp_len <= 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (stats.match[n] <= 0 || stats.total[n] <= 0) return 0.0;
    log_sum += std::log(static_cast<double>(stats.match[n])) - std::log(static_cast<double>(stats.total[n]));
  }
  return brevity_penalty(stats.hyp_len, stats.ref_len) * std::exp(log_sum / kMaxOrder);
}

double sentence_bleu(const BleuStats& stats, Smoothing scheme) {
  if (scheme == Smoothing::None) throw Error("sentence_bleu requires a smoothing scheme");
  const std::int64_t c = stats.hyp_len;
  if (c <= 0) return 0.0;

  double log_sum = 0.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    const bool smooth = n > 0 || scheme == Smoothing::PlusOneBpGrounded;
    const double add = smooth ? 1.0 : 0.0;
    const double m = static_cast<double>(stats.match[n]) + add;
    const double t = static_cast<double>(stats.total[n]) + add;
    if (m <= 0.0 || t <= 0.0) return 0.0;
    log_sum += std::log(m) - std::log(t);
  }

  std::int64_t r = stats.ref_len;
  if (scheme != Smoothing::PlusOne && c < r) r = std::max(c, r - 1);
  return brevity_penalty(c, r) * std::exp(log_sum / kMaxOrder);
}

ReferenceSet::ReferenceSet(std::vector<Tokens> references, RefLengthTie tie)
    : references_(std::move(references)), tie_(tie) {
  if (references_.empty()) throw Error("reference set is empty");
  for (const auto& ref : references_) {
    lengths_.push_back(static_cast<std::int64_t>(ref.size()));
    for (int n = 1; n <= kMaxOrder; ++n)
      for (const auto& [gram, count] : count_ngrams(ref, n)) {
        auto& slot = max_counts_[n - 1][gram];
        slot = std::max(slot, count);
      }
  }
}

BleuStats ReferenceSet::stats(std::span<const std::string> hyp) const {
  BleuStats s;
  s.hyp_len = static_cast<std::int64_t>(hyp.size());
  s.ref_len = effective_ref_length(s.hyp_len, lengths_, tie_);
  for (int n = 1; n <= kMaxOrder; ++n) {
    s.total[n - 1] = ngram_total(s.hyp_len, n);
    const auto& table = max_counts_[n - 1];
    for (const auto& [gram, count] : count_ngrams(hyp, n)) {
      auto it = table.find(gram);
      if (it != table.end()) s.match[n - 1] += std::min(count, it->second);
    }
  }
  return s;
}

BleuStats compute_stats(std::span<const std::string> hyp, std::span<const Tokens> refs, RefLengthTie tie) {
  return ReferenceSet(std::vector<Tokens>(refs.begin(), refs.end()), tie).stats(hyp);
}

double sentence_bleu(std::span<const std::string> hyp, std::span<const Tokens> refs, Smoothing scheme) {
  return sentence_bleu(compute_stats(hyp, refs), scheme);
}

}  // namespace lengthtune
