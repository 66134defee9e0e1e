#pragma once

// Experiment grids over length-based tuning subsets: every optimizer is tuned
// on each selected subset of the tuning split and scored on length-based
// subsets of the test split.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lengthtune/synth.hpp"
#include "lengthtune/tuning.hpp"

namespace lengthtune {

// Tuning-side subset of an experiment.
enum class TuneCondition { Shortest, Middle, Longest, Random, Full };

TuneCondition parse_tune_condition(std::string_view name);
std::string_view tune_condition_name(TuneCondition c);

struct ExperimentPlan {
  // Either a task directory in the `synth` file layout or a generated task.
  std::optional<std::filesystem::path> task_dir;
  SynthConfig synth;

  std::vector<OptimizerKind> optimizers{OptimizerKind::Mert, OptimizerKind::Pro};
  Smoothing metric = Smoothing::PlusOne;
  std::vector<TuneCondition> tune_conditions{TuneCondition::Shortest, TuneCondition::Middle,
                                             TuneCondition::Longest};
  double fraction = 0.5;
  int reruns = 3;
  std::uint64_t seed = 1;
  int iterations = 25;
  std::size_t nbest_size = 1000;
  std::optional<double> pro_max_gap = 10.0;
  int mert_random_restarts = 0;
  bool cutoff_sweep = false;
  std::vector<double> cutoff_fractions = lengthtune::cutoff_fractions();
  unsigned threads = 1;

  // Flat `key = value` text; unknown keys are errors. Keys prefixed with
  // `synth.` configure the generated task.
  static ExperimentPlan parse(const std::string& text);
  static ExperimentPlan from_file(const std::filesystem::path& path);
  // LENGTHTUNE_SEED and LENGTHTUNE_THREADS, when set, override the plan.
  void apply_environment();
  void validate() const;

  TuningConfig tuning_config(OptimizerKind optimizer) const;
};

SynthTask load_task(const ExperimentPlan& plan);

// Test-side subsets, always in this order.
inline constexpr const char* kTestConditions[] = {"short", "mid", "long", "full"};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation over reruns
};
Summary summarize(const std::vector<double>& values);

struct ReportRow {
  OptimizerKind optimizer = OptimizerKind::Pro;
  TuneCondition tune = TuneCondition::Full;
  std::string test;
  double tune_verbosity = 0.0;
  double tune_mean_source_length = 0.0;
  int reruns = 0;
  Summary bleu, bp, hvb, lr;
  bool failed = false;
  std::string error;
};

// Weights of every iteration of one tuning rerun.
struct TraceRecord {
  OptimizerKind optimizer = OptimizerKind::Pro;
  std::string subset;  // tune condition name or cutoff fraction
  int rerun = 0;
  std::vector<IterationRecord> iterations;
};

struct GridResult {
  std::vector<ReportRow> rows;
  std::vector<TraceRecord> traces;
};

// Rows ordered by optimizer, tune condition (plan order) then test condition.
GridResult run_grid(const ExperimentPlan& plan, const SynthTask& task);

struct CutoffRow {
  double fraction = 1.0;
  int rerun = 0;
  double tune_verbosity = 0.0;
  double tune_mean_source_length = 0.0;
  Evaluation test;  // on the full test split
  bool failed = false;
  std::string error;
};

struct CutoffResult {
  std::vector<CutoffRow> rows;
  std::vector<TraceRecord> traces;
};

// PRO on the longest `fraction` of the tuning split for each plan fraction.
// Requires a single-reference task.
CutoffResult run_cutoff_sweep(const ExperimentPlan& plan, const SynthTask& task);

}  // namespace lengthtune
