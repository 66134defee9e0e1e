#pragma once

// Length-based tuning subsets and the dataset / output diagnostics used to
// compare them (verbosity, length ratio, correlations, genre divergence).

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lengthtune/corpus.hpp"
#include "lengthtune/metrics.hpp"

namespace lengthtune {

enum class LengthCondition { Shortest, Middle, Longest, CutoffLongest };

LengthCondition parse_condition(std::string_view name);
std::string_view condition_name(LengthCondition c);

struct SelectionSpec {
  LengthCondition condition = LengthCondition::Longest;
  double fraction = 0.5;
};

// round(n * fraction), at least 1. Throws for fraction outside (0, 1].
std::size_t selection_size(std::size_t n, double fraction);

// Indices into `segments`, ascending (document order). Segments are ranked
// by source token count with ties kept in document order.
std::vector<std::size_t> select_indices_by_length(std::span<const Segment> segments, SelectionSpec spec);
std::vector<Segment> select_by_length(std::span<const Segment> segments, SelectionSpec spec);

// Seeded uniform sample without replacement, returned in document order.
std::vector<std::size_t> select_indices_random(std::size_t n, double fraction, std::uint64_t seed);

// The fractions of the shortest-removal sweep: 1.0, 0.9, ..., 0.5.
std::vector<double> cutoff_fractions();

enum class VerbosityConvention { MeanReference, FirstReference };

struct DatasetStats {
  std::size_t n_segments = 0;
  std::int64_t n_source_tokens = 0;
  double n_reference_tokens = 0.0;  // per the verbosity convention
  double mean_source_length = 0.0;
  double verbosity = 0.0;
  std::vector<std::int64_t> source_lengths;
};

DatasetStats dataset_stats(std::span<const Segment> segments,
                           VerbosityConvention convention = VerbosityConvention::MeanReference);

// Per-segment verbosity |ref| / |src| under the same convention.
std::vector<double> segment_verbosity(std::span<const Segment> segments,
                                      VerbosityConvention convention = VerbosityConvention::MeanReference);

struct HypothesisDiagnostics {
  double hvb = 0.0;  // output words per source word
  double lr = 0.0;   // output words per effective reference word
  double bp = 0.0;
  std::int64_t hyp_tokens = 0;
  std::int64_t source_tokens = 0;
  std::int64_t ref_tokens = 0;  // sum of effective reference lengths
};

HypothesisDiagnostics hypothesis_diagnostics(std::span<const Segment> segments, std::span<const Tokens> hypotheses,
                                             RefLengthTie tie = RefLengthTie::Shorter);

// Product-moment correlation. Throws Error on size mismatch, fewer than two
// points, or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

// Pearson on average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

// Kendall's tau-b; 0 when either side is constant.
double kendall_tau(std::span<const double> x, std::span<const double> y);

using Distribution = std::map<std::string, double, std::less<>>;

Distribution category_distribution(std::span<const std::string> labels);

// D(p || q) in nats after add-epsilon smoothing and renormalisation.
// Throws when the category sets differ.
double kl_divergence(const Distribution& p, const Distribution& q, double epsilon = 1e-6);

}  // namespace lengthtune
