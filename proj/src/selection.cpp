#include "lengthtune/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lengthtune/random.hpp"

namespace lengthtune {

LengthCondition parse_condition(std::string_view name) {
  if (name == "shortest" || name == "short" || name == "low50") return LengthCondition::Shortest;
  if (name == "middle" || name == "mid" || name == "mid50") return LengthCondition::Middle;
  if (name == "longest" || name == "long" || name == "top50") return LengthCondition::Longest;
  if (name == "cutoff") return LengthCondition::CutoffLongest;
  throw Error("unknown length condition '" + std::string(name) + "'");
}

std::string_view condition_name(LengthCondition c) {
  switch (c) {
    case LengthCondition::Shortest: return "shortest";
    case LengthCondition::Middle: return "middle";
    case LengthCondition::Longest: return "longest";
    case LengthCondition::CutoffLongest: return "cutoff";
  }
  return "longest";
}

std::size_t selection_size(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw Error("selection fraction must be in (0, 1], got " + format_double(fraction));
  auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
  return std::clamp<std::size_t>(k, 1, n);
}

std::vector<std::size_t> select_indices_by_length(std::span<const Segment> segments, SelectionSpec spec) {
  if (segments.empty()) throw Error("cannot select from an empty segment set");
  const std::size_t n = segments.size();
  const std::size_t k = selection_size(n, spec.fraction);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return segments[a].source.size() < segments[b].source.size();
  });

  std::size_t start = 0;
  switch (spec.condition) {
    case LengthCondition::Shortest: start = 0; break;
    case LengthCondition::Middle: start = (n - k) / 2; break;
    case LengthCondition::Longest:
    case LengthCondition::CutoffLongest: start = n - k; break;
  }
  std::vector<std::size_t> picked(order.begin() + static_cast<std::ptrdiff_t>(start),
                                  order.begin() + static_cast<std::ptrdiff_t>(start + k));
  std::sort(picked.begin(), picked.end());
  return picked;
}

std::vector<Segment> select_by_length(std::span<const Segment> segments, SelectionSpec spec) {
  std::vector<Segment> out;
  for (std::size_t i : select_indices_by_length(segments, spec)) out.push_back(segments[i]);
  return out;
}

std::vector<std::size_t> select_indices_random(std::size_t n, double fraction, std::uint64_t seed) {
  if (n == 0) throw Error("cannot select from an empty segment set");
  const std::size_t k = selection_size(n, fraction);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + uniform_index(rng, n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<double> cutoff_fractions() { return {1.0, 0.9, 0.8, 0.7, 0.6, 0.5}; }

namespace {

double reference_tokens(const Segment& seg, VerbosityConvention convention) {
  if (convention == VerbosityConvention::FirstReference) return static_cast<double>(seg.references.front().size());
  double sum = 0.0;
  for (const auto& ref : seg.references) sum += static_cast<double>(ref.size());
  return sum / static_cast<double>(seg.references.size());
}

}  // namespace

DatasetStats dataset_stats(std::span<const Segment> segments, VerbosityConvention convention) {
  if (segments.empty()) throw Error("dataset_stats needs at least one segment");
  DatasetStats s;
  s.n_segments = segments.size();
  for (const auto& seg : segments) {
    auto len = static_cast<std::int64_t>(seg.source.size());
    s.source_lengths.push_back(len);
    s.n_source_tokens += len;
    s.n_reference_tokens += reference_tokens(seg, convention);
  }
  s.mean_source_length = static_cast<double>(s.n_source_tokens) / static_cast<double>(s.n_segments);
  s.verbosity = s.n_reference_tokens / static_cast<double>(s.n_source_tokens);
  return s;
}

std::vector<double> segment_verbosity(std::span<const Segment> segments, VerbosityConvention convention) {
  std::vector<double> out;
  out.reserve(segments.size());
  for (const auto& seg : segments)
    out.push_back(reference_tokens(seg, convention) / static_cast<double>(seg.source.size()));
  return out;
}

HypothesisDiagnostics hypothesis_diagnostics(std::span<const Segment> segments, std::span<const Tokens> hypotheses,
                                             RefLengthTie tie) {
  if (segments.size() != hypotheses.size())
    throw Error("hypothesis count " + std::to_string(hypotheses.size()) + " does not match segment count " +
                std::to_string(segments.size()));
  if (segments.empty()) throw Error("hypothesis_diagnostics needs at least one segment");
  HypothesisDiagnostics d;
  std::vector<std::int64_t> lengths;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto c = static_cast<std::int64_t>(hypotheses[i].size());
    lengths.clear();
    for (const auto& ref : segments[i].references) lengths.push_back(static_cast<std::int64_t>(ref.size()));
    d.hyp_tokens += c;
    d.source_tokens += static_cast<std::int64_t>(segments[i].source.size());
    d.ref_tokens += effective_ref_length(c, lengths, tie);
  }
  d.hvb = static_cast<double>(d.hyp_tokens) / static_cast<double>(d.source_tokens);
  d.lr = static_cast<double>(d.hyp_tokens) / static_cast<double>(d.ref_tokens);
  d.bp = brevity_penalty(d.hyp_tokens, d.ref_tokens);
  return d;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson: size mismatch");
  if (x.size() < 2) throw Error("pearson: need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw Error("pearson: zero variance, correlation undefined");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("spearman: size mismatch");
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("kendall_tau: size mismatch");
  std::int64_t concordant = 0, discordant = 0, tied_x = 0, tied_y = 0, pairs = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      ++pairs;
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0.0) ++tied_x;
      if (dy == 0.0) ++tied_y;
      if (dx == 0.0 || dy == 0.0) continue;
      if ((dx > 0) == (dy > 0))
        ++concordant;
      else
        ++discordant;
    }
  const double denom = std::sqrt(static_cast<double>(pairs - tied_x) * static_cast<double>(pairs - tied_y));
  if (denom <= 0.0) return 0.0;
  return static_cast<double>(concordant - discordant) / denom;
}

Distribution category_distribution(std::span<const std::string> labels) {
  Distribution d;
  for (const auto& label : labels) d[label] += 1.0;
  for (auto& kv : d) kv.second /= static_cast<double>(labels.size());
  return d;
}

double kl_divergence(const Distribution& p, const Distribution& q, double epsilon) {
  if (p.size() != q.size() || !std::equal(p.begin(), p.end(), q.begin(),
                                          [](const auto& a, const auto& b) { return a.first == b.first; }))
    throw Error("kl_divergence: category sets differ");
  if (p.empty()) throw Error("kl_divergence: empty distribution");
  if (epsilon < 0.0) throw Error("kl_divergence: epsilon must be non-negative");
  auto smoothed = [&](const Distribution& d) {
    std::vector<double> v;
    double total = 0.0;
    for (const auto& kv : d) {
      if (kv.second < 0.0 || !std::isfinite(kv.second)) throw Error("kl_divergence: invalid probability");
      v.push_back(kv.second + epsilon);
      total += kv.second + epsilon;
    }
    if (total <= 0.0) throw Error("kl_divergence: zero mass");
    for (auto& x : v) x /= total;
    return v;
  };
  auto ps = smoothed(p);
  auto qs = smoothed(q);
  double sum = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i] <= 0.0) continue;
    if (qs[i] <= 0.0) throw Error("kl_divergence: q has zero mass where p does not; use epsilon > 0");
    sum += ps[i] * std::log(ps[i] / qs[i]);
  }
  return std::max(0.0, sum);
}

}  // namespace lengthtune
