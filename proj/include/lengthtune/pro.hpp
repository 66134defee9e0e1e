#pragma once

// Pairwise ranking optimisation: sample candidate pairs whose sentence-level
// scores differ by a bounded amount, then fit a linear classifier on their
// feature differences.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lengthtune/metrics.hpp"
#include "lengthtune/problem.hpp"
#include "lengthtune/random.hpp"

namespace lengthtune {

struct ProConfig {
  int pairs_sampled_per_segment = 5000;
  int pairs_kept_per_segment = 50;
  double min_score_gap = 0.05;  // sentence metric points
  // Upper bound on the score gap of a kept pair; nullopt disables the cap.
  std::optional<double> max_score_gap = 10.0;
  double interpolation = 0.1;
  int classifier_steps = 300;
  double classifier_learning_rate = 1.0;
  Smoothing metric = Smoothing::PlusOne;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RankedPair {
  std::size_t better = 0;
  std::size_t worse = 0;
  double gap = 0.0;
};

// Draws pairs_sampled uniform (i, j) index pairs, keeps distinct unordered
// pairs with min_gap < |g_i - g_j| <= max_gap, and returns the
// pairs_kept with the largest gaps, better candidate first.
std::vector<RankedPair> pro_sample_pairs(std::span<const double> scores, const ProConfig& config, Rng& rng);

// One training pair: feature difference and its label (+1 when `diff` is
// better minus worse). Each pair also contributes its mirror (-diff, -label).
struct PairExample {
  std::vector<double> diff;
  int label = 1;
};

// Logistic regression by full-batch gradient descent from zero, on
// max-abs-scaled columns. Returns nullopt for an empty training set.
std::optional<std::vector<double>> train_pairwise_classifier(std::span<const PairExample> examples,
                                                             std::size_t dim, const ProConfig& config);

struct ProStep {
  std::vector<double> weights;
  std::size_t pairs = 0;
};

// Samples pairs over every segment, trains, and interpolates
// w <- (1 - psi) w + psi w_new. With no pairs the weights are unchanged.
ProStep pro_iterate(const TuningProblem& problem, std::span<const double> w, const ProConfig& config, Rng& rng);

}  // namespace lengthtune
