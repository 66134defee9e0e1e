#pragma once

// Outer tuning loop: decode with the current weights, accumulate n-best
// lists, re-optimise, repeat; several independently seeded reruns.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lengthtune/corpus.hpp"
#include "lengthtune/mert.hpp"
#include "lengthtune/pro.hpp"
#include "lengthtune/selection.hpp"

namespace lengthtune {

// Anything that turns weights into per-segment n-best lists.
class NBestSource {
 public:
  virtual ~NBestSource() = default;

  virtual const std::vector<Segment>& segments() const = 0;
  virtual std::vector<std::string> feature_names() const = 0;
  // One list per segment, in segment order, at most nbest_size entries each.
  virtual std::vector<NBestList> decode(const WeightVector& w, std::size_t nbest_size) const = 0;
  virtual WeightVector initial_weights() const;
};

// Fixed n-best lists, e.g. read from files. decode() reranks them.
class StaticNBestSource : public NBestSource {
 public:
  StaticNBestSource(std::vector<Segment> segments, std::vector<NBestList> lists);

  const std::vector<Segment>& segments() const override { return segments_; }
  std::vector<std::string> feature_names() const override { return names_; }
  std::vector<NBestList> decode(const WeightVector& w, std::size_t nbest_size) const override;

 private:
  std::vector<Segment> segments_;
  std::vector<NBestList> lists_;
  std::vector<std::string> names_;
};

// The k best hypotheses by model score, stable for ties.
NBestList top_k(const NBestList& pool, const WeightVector& w, std::size_t k);

enum class OptimizerKind { Mert, Pro };

OptimizerKind parse_optimizer(std::string_view name);
std::string_view optimizer_name(OptimizerKind kind);

struct TuningConfig {
  OptimizerKind optimizer = OptimizerKind::Pro;
  int max_iterations = 25;
  std::size_t nbest_size = 1000;
  int reruns = 3;
  std::uint64_t seed = 0;
  double convergence_tolerance = 1e-6;
  RefLengthTie tie = RefLengthTie::Shorter;
  MertConfig mert;
  ProConfig pro;
};

struct Evaluation {
  double bleu = 0.0;
  double bp = 0.0;
  double hvb = 0.0;
  double lr = 0.0;
};

// Decodes the top-1 per segment and scores it against the references.
Evaluation evaluate(const NBestSource& source, const WeightVector& w, RefLengthTie tie = RefLengthTie::Shorter);

struct IterationRecord {
  int iteration = 0;
  WeightVector weights;
  Evaluation tuning;  // top-1 under `weights` on the tuning set
  std::size_t candidates = 0;
  std::size_t pairs = 0;
};

struct RerunResult {
  int rerun = 0;
  std::uint64_t seed = 0;
  WeightVector weights;
  std::vector<IterationRecord> trace;
  bool converged = false;
  Evaluation test;
  bool has_test = false;
};

struct TuningResult {
  std::vector<RerunResult> reruns;
  Evaluation mean_test;  // only meaningful when reruns carry test scores
};

std::uint64_t rerun_seed(std::uint64_t seed, int rerun);
// Seed of the MERT search in a given iteration (1-based) of a rerun.
std::uint64_t iteration_seed(std::uint64_t rerun_seed, int iteration);

RerunResult tune_once(const NBestSource& tuning, const TuningConfig& config, int rerun);

// Runs config.reruns independent reruns; when `test` is given, each rerun's
// final weights are evaluated on it and averaged.
TuningResult run_tuning(const NBestSource& tuning, const TuningConfig& config, const NBestSource* test = nullptr);

}  // namespace lengthtune
