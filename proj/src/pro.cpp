#include "lengthtune/pro.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace lengthtune {

void ProConfig::validate() const {
  if (pairs_sampled_per_segment < 0 || pairs_kept_per_segment < 0)
    throw Error("PRO pair counts must be non-negative");
  if (pairs_kept_per_segment > pairs_sampled_per_segment)
    throw Error("PRO keeps more pairs than it samples");
  if (!(min_score_gap > 0.0)) throw Error("PRO min_score_gap must be positive");
  if (max_score_gap && !(*max_score_gap >= min_score_gap))
    throw Error("PRO max_score_gap must be >= min_score_gap");
  if (!(interpolation >= 0.0 && interpolation <= 1.0)) throw Error("PRO interpolation must be in [0, 1]");
  if (classifier_steps < 0 || !(classifier_learning_rate > 0.0))
    throw Error("PRO classifier settings are invalid");
  if (metric == Smoothing::None) throw Error("PRO needs a sentence-level metric");
}

std::vector<RankedPair> pro_sample_pairs(std::span<const double> scores, const ProConfig& config, Rng& rng) {
  struct Draw {
    std::size_t lo, hi, order;
    double gap;
  };
  std::vector<RankedPair> kept;
  const std::size_t n = scores.size();
  if (n < 2) return kept;
  // Distinct unordered pairs, first draw wins.
  std::vector<bool> seen;
  std::unordered_set<std::uint64_t> seen_large;
  const bool dense = n <= 2048;
  if (dense) seen.assign(n * n, false);
  std::vector<Draw> draws;
  for (int k = 0; k < config.pairs_sampled_per_segment; ++k) {
    const std::size_t i = uniform_index(rng, n);
    const std::size_t j = uniform_index(rng, n);
    if (i == j) continue;
    const double gap = std::abs(scores[i] - scores[j]);
    if (!(gap > config.min_score_gap)) continue;
    if (config.max_score_gap && gap > *config.max_score_gap) continue;
    const std::size_t lo = std::min(i, j), hi = std::max(i, j);
    if (dense) {
      if (seen[lo * n + hi]) continue;
      seen[lo * n + hi] = true;
    } else if (!seen_large.insert(static_cast<std::uint64_t>(lo) * n + hi).second) {
      continue;
    }
    draws.push_back({lo, hi, draws.size(), gap});
  }
  const std::size_t keep = std::min(draws.size(), static_cast<std::size_t>(config.pairs_kept_per_segment));
  std::partial_sort(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(keep), draws.end(),
                    [](const Draw& a, const Draw& b) { return a.gap != b.gap ? a.gap > b.gap : a.order < b.order; });
  kept.reserve(keep);
  for (std::size_t k = 0; k < keep; ++k) {
    const auto& d = draws[k];
    if (scores[d.lo] > scores[d.hi])
      kept.push_back({d.lo, d.hi, d.gap});
    else
      kept.push_back({d.hi, d.lo, d.gap});
  }
  return kept;
}

namespace {

// 1 / (1 + e^z) written so both signs stay finite.
double sigmoid_neg(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

}  // namespace

std::optional<std::vector<double>> train_pairwise_classifier(std::span<const PairExample> examples,
                                                             std::size_t dim, const ProConfig& config) {
  if (examples.empty()) return std::nullopt;
  std::vector<double> scale(dim, 0.0);
  for (const auto& ex : examples) {
    if (ex.diff.size() != dim) throw Error("pair example has the wrong dimension");
    if (ex.label != 1 && ex.label != -1) throw Error("pair labels must be +1 or -1");
    for (std::size_t j = 0; j < dim; ++j) scale[j] = std::max(scale[j], std::abs(ex.diff[j]));
  }
  for (auto& s : scale)
    if (s == 0.0) s = 1.0;

  std::vector<double> x(examples.size() * dim);
  for (std::size_t i = 0; i < examples.size(); ++i)
    for (std::size_t j = 0; j < dim; ++j) x[i * dim + j] = examples[i].diff[j] / scale[j];

  // The mirrored example (-x, -y) has the same gradient term as (x, y), so
  // the doubled set is folded into one pass.
  std::vector<double> w(dim, 0.0), grad(dim);
  const double inv_n = 1.0 / static_cast<double>(examples.size());
  for (int step = 0; step < config.classifier_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const double* xi = x.data() + i * dim;
      const double y = examples[i].label;
      double z = 0.0;
      for (std::size_t j = 0; j < dim; ++j) z += w[j] * xi[j];
      const double margin = y * z;
      const double coef = y * sigmoid_neg(margin);
      for (std::size_t j = 0; j < dim; ++j) grad[j] += coef * xi[j];
    }
    for (std::size_t j = 0; j < dim; ++j) w[j] += config.classifier_learning_rate * inv_n * grad[j];
  }
  for (std::size_t j = 0; j < dim; ++j) w[j] /= scale[j];
  return w;
}

ProStep pro_iterate(const TuningProblem& problem, std::span<const double> w, const ProConfig& config, Rng& rng) {
  config.validate();
  const std::size_t dim = problem.dim();
  std::vector<PairExample> examples;
  std::vector<double> scores;
  for (std::size_t s = 0; s < problem.num_segments(); ++s) {
    const auto& seg = problem.segment(s);
    scores.resize(seg.size());
    for (std::size_t h = 0; h < seg.size(); ++h) scores[h] = problem.sentence_points(s, h, config.metric);
    for (const auto& pair : pro_sample_pairs(scores, config, rng)) {
      PairExample ex;
      ex.diff.resize(dim);
      auto a = problem.row(s, pair.better), b = problem.row(s, pair.worse);
      for (std::size_t j = 0; j < dim; ++j) ex.diff[j] = a[j] - b[j];
      examples.push_back(std::move(ex));
    }
  }

  ProStep out;
  out.weights.assign(w.begin(), w.end());
  out.pairs = examples.size();
  auto fitted = train_pairwise_classifier(examples, dim, config);
  if (!fitted) return out;
  for (std::size_t j = 0; j < dim; ++j)
    out.weights[j] = (1.0 - config.interpolation) * w[j] + config.interpolation * (*fitted)[j];
  return out;
}

}  // namespace lengthtune
