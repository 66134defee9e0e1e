#pragma once

// Exact line search over the upper envelope of candidate score lines, and a
// coordinate/random-direction search with restarts built on it.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "lengthtune/corpus.hpp"
#include "lengthtune/problem.hpp"

namespace lengthtune {

// score(gamma) = intercept + gamma * slope
struct Line {
  double slope = 0.0;
  double intercept = 0.0;
};

// `winner` scores highest on [left, right). Pieces are ordered and cover the
// whole real line; left of the first piece is -inf, right of the last +inf.
struct EnvelopePiece {
  double left = -std::numeric_limits<double>::infinity();
  double right = std::numeric_limits<double>::infinity();
  std::size_t winner = 0;
};

// Identical lines resolve to the lowest index. At a breakpoint the line with
// the greater slope owns the point.
std::vector<EnvelopePiece> upper_envelope(std::span<const Line> lines);

std::vector<EnvelopePiece> mert_envelope(const NBestList& nbest, const WeightVector& w,
                                         const WeightVector& direction);

struct MertConfig {
  int random_restarts = 0;
  int random_directions = 8;
  double gamma_window = 10.0;
  double min_improvement = 1e-6;
  int max_passes = 100;
  std::uint64_t seed = 0;
};

struct LineSearchResult {
  double gamma = 0.0;
  double bleu = 0.0;
};

// Best step along `direction`. Returns gamma = 0 unless some step strictly
// improves corpus BLEU over the current weights.
LineSearchResult mert_line_search(const TuningProblem& problem, std::span<const double> w,
                                  std::span<const double> direction, double gamma_window = 10.0);

struct MertResult {
  std::vector<double> weights;
  double bleu = 0.0;
  int passes = 0;
};

MertResult mert_iterate(const TuningProblem& problem, std::span<const double> w0, const MertConfig& config);
WeightVector mert_iterate(const TuningProblem& problem, const WeightVector& w0, const MertConfig& config);

}  // namespace lengthtune
