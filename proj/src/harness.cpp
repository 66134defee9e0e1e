#include "lengthtune/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

#include "lengthtune/keyvalue.hpp"

namespace lengthtune {

TuneCondition parse_tune_condition(std::string_view name) {
  if (name == "shortest" || name == "short" || name == "low50") return TuneCondition::Shortest;
  if (name == "middle" || name == "mid" || name == "mid50") return TuneCondition::Middle;
  if (name == "longest" || name == "long" || name == "top50") return TuneCondition::Longest;
  if (name == "random" || name == "rand50") return TuneCondition::Random;
  if (name == "full") return TuneCondition::Full;
  throw Error("unknown tune condition '" + std::string(name) + "'");
}

std::string_view tune_condition_name(TuneCondition c) {
  switch (c) {
    case TuneCondition::Shortest: return "shortest";
    case TuneCondition::Middle: return "middle";
    case TuneCondition::Longest: return "longest";
    case TuneCondition::Random: return "random";
    case TuneCondition::Full: return "full";
  }
  return "?";
}

namespace {

const std::set<std::string, std::less<>> kPlanKeys{
    "task_dir",   "optimizers", "metric",       "tune_conditions",      "fraction",
    "reruns",     "seed",       "iterations",   "nbest_size",           "pro_max_gap",
    "threads",    "cutoff_sweep", "cutoff_fractions", "mert_random_restarts"};

double parse_real(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw Error("");
    return v;
  } catch (const std::exception&) {
    throw Error("bad " + what + " '" + text + "'");
  }
}

}  // namespace

ExperimentPlan ExperimentPlan::parse(const std::string& text) {
  const auto kv = KeyValues::parse(text);
  ExperimentPlan plan;
  std::string synth_text;
  KeyValues general;
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind("synth.", 0) == 0)
      synth_text += key.substr(6) + " = " + value + "\n";
    else
      general.set(key, value);
  }
  general.require_known(kPlanKeys);
  plan.synth = config_from_text(synth_text);

  if (general.has("task_dir")) plan.task_dir = general.get("task_dir", "");
  if (general.has("optimizers")) {
    plan.optimizers.clear();
    for (const auto& name : general.get_list("optimizers", {})) plan.optimizers.push_back(parse_optimizer(name));
  }
  if (general.has("metric")) plan.metric = parse_smoothing(general.get("metric", ""));
  if (general.has("tune_conditions")) {
    plan.tune_conditions.clear();
    for (const auto& name : general.get_list("tune_conditions", {}))
      plan.tune_conditions.push_back(parse_tune_condition(name));
  }
  plan.fraction = general.get_double("fraction", plan.fraction);
  plan.reruns = static_cast<int>(general.get_int("reruns", plan.reruns));
  plan.seed = general.get_uint("seed", plan.seed);
  plan.iterations = static_cast<int>(general.get_int("iterations", plan.iterations));
  plan.nbest_size = general.get_uint("nbest_size", plan.nbest_size);
  if (general.has("pro_max_gap")) {
    const auto gap = general.get("pro_max_gap", "");
    if (gap == "off" || gap == "none")
      plan.pro_max_gap.reset();
    else
      plan.pro_max_gap = parse_real(gap, "pro_max_gap");
  }
  plan.mert_random_restarts = static_cast<int>(general.get_int("mert_random_restarts", plan.mert_random_restarts));
  plan.cutoff_sweep = general.get_bool("cutoff_sweep", plan.cutoff_sweep);
  if (general.has("cutoff_fractions")) {
    plan.cutoff_fractions.clear();
    for (const auto& f : general.get_list("cutoff_fractions", {}))
      plan.cutoff_fractions.push_back(parse_real(f, "cutoff fraction"));
  }
  plan.threads = static_cast<unsigned>(general.get_uint("threads", plan.threads));
  plan.validate();
  return plan;
}

ExperimentPlan ExperimentPlan::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read plan " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto plan = parse(buf.str());
  if (plan.task_dir && plan.task_dir->is_relative()) plan.task_dir = path.parent_path() / *plan.task_dir;
  return plan;
}

void ExperimentPlan::apply_environment() {
  if (const char* s = std::getenv("LENGTHTUNE_SEED"); s && *s) {
    KeyValues kv;
    kv.set("LENGTHTUNE_SEED", s);
    seed = kv.get_uint("LENGTHTUNE_SEED", seed);
  }
  if (const char* t = std::getenv("LENGTHTUNE_THREADS"); t && *t) {
    KeyValues kv;
    kv.set("LENGTHTUNE_THREADS", t);
    threads = static_cast<unsigned>(kv.get_uint("LENGTHTUNE_THREADS", threads));
  }
  validate();
}

void ExperimentPlan::validate() const {
  if (optimizers.empty()) throw Error("plan: no optimizers");
  if (tune_conditions.empty()) throw Error("plan: no tune conditions");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error("plan: fraction must be in (0, 1]");
  if (reruns < 1) throw Error("plan: reruns must be >= 1");
  if (iterations < 1) throw Error("plan: iterations must be >= 1");
  if (nbest_size < 1) throw Error("plan: nbest_size must be >= 1");
  if (mert_random_restarts < 0) throw Error("plan: mert_random_restarts must be >= 0");
  if (threads < 1) throw Error("plan: threads must be >= 1");
  if (metric == Smoothing::None) throw Error("plan: metric must be a sentence-level scheme");
  for (double f : cutoff_fractions)
    if (!(f > 0.0 && f <= 1.0)) throw Error("plan: cutoff fractions must be in (0, 1]");
  if (!task_dir) synth.validate();
}

TuningConfig ExperimentPlan::tuning_config(OptimizerKind optimizer) const {
  TuningConfig c;
  c.optimizer = optimizer;
  c.max_iterations = iterations;
  c.nbest_size = nbest_size;
  c.reruns = reruns;
  c.seed = seed;
  c.pro.metric = metric;
  c.pro.max_score_gap = pro_max_gap;
  c.mert.random_restarts = mert_random_restarts;
  return c;
}

SynthTask load_task(const ExperimentPlan& plan) {
  return plan.task_dir ? read_task(*plan.task_dir) : generate_task(plan.synth);
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

namespace {

// Runs jobs[0..n) on up to `threads` workers. Each job writes only its own
// result slot, so the output order never depends on scheduling.
void run_jobs(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& job) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    });
  for (auto& t : pool) t.join();
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

std::vector<std::size_t> tune_indices(const ExperimentPlan& plan, const SynthSplit& split, TuneCondition c) {
  switch (c) {
    case TuneCondition::Shortest:
      return select_indices_by_length(split.segments, {LengthCondition::Shortest, plan.fraction});
    case TuneCondition::Middle:
      return select_indices_by_length(split.segments, {LengthCondition::Middle, plan.fraction});
    case TuneCondition::Longest:
      return select_indices_by_length(split.segments, {LengthCondition::Longest, plan.fraction});
    case TuneCondition::Random:
      return select_indices_random(split.segments.size(), plan.fraction, plan.seed);
    case TuneCondition::Full:
      return all_indices(split.segments.size());
  }
  return {};
}

std::vector<Segment> pick(const std::vector<Segment>& segments, const std::vector<std::size_t>& idx) {
  std::vector<Segment> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(segments[i]);
  return out;
}

std::vector<StaticNBestSource> test_sources(const ExperimentPlan& plan, const SynthSplit& test) {
  std::vector<StaticNBestSource> out;
  const LengthCondition conds[] = {LengthCondition::Shortest, LengthCondition::Middle, LengthCondition::Longest};
  for (auto c : conds) out.push_back(test.source(select_indices_by_length(test.segments, {c, plan.fraction})));
  out.push_back(test.source());
  return out;
}

std::string what_of(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

}  // namespace

GridResult run_grid(const ExperimentPlan& plan, const SynthTask& task) {
  plan.validate();
  const auto tests = test_sources(plan, task.test);
  const std::size_t n_tests = std::size(kTestConditions);

  struct Cell {
    OptimizerKind optimizer;
    TuneCondition tune;
  };
  std::vector<Cell> cells;
  for (auto opt : plan.optimizers)
    for (auto cond : plan.tune_conditions) cells.push_back({opt, cond});

  std::vector<std::vector<ReportRow>> rows(cells.size());
  std::vector<std::vector<TraceRecord>> traces(cells.size());
  run_jobs(cells.size(), plan.threads, [&](std::size_t i) {
    const auto& cell = cells[i];
    std::vector<ReportRow> out(n_tests);
    for (std::size_t t = 0; t < n_tests; ++t) {
      out[t].optimizer = cell.optimizer;
      out[t].tune = cell.tune;
      out[t].test = kTestConditions[t];
      out[t].reruns = plan.reruns;
    }
    try {
      const auto idx = tune_indices(plan, task.tuning, cell.tune);
      const auto stats = dataset_stats(pick(task.tuning.segments, idx));
      const auto source = task.tuning.source(idx);
      const auto config = plan.tuning_config(cell.optimizer);
      std::vector<std::vector<Evaluation>> evals(n_tests);
      for (int r = 0; r < plan.reruns; ++r) {
        auto result = tune_once(source, config, r);
        for (std::size_t t = 0; t < n_tests; ++t) evals[t].push_back(evaluate(tests[t], result.weights, config.tie));
        traces[i].push_back({cell.optimizer, std::string(tune_condition_name(cell.tune)), r, std::move(result.trace)});
      }
      for (std::size_t t = 0; t < n_tests; ++t) {
        auto& row = out[t];
        row.tune_verbosity = stats.verbosity;
        row.tune_mean_source_length = stats.mean_source_length;
        std::vector<double> bleu, bp, hvb, lr;
        for (const auto& e : evals[t]) {
          bleu.push_back(e.bleu);
          bp.push_back(e.bp);
          hvb.push_back(e.hvb);
          lr.push_back(e.lr);
        }
        row.bleu = summarize(bleu);
        row.bp = summarize(bp);
        row.hvb = summarize(hvb);
        row.lr = summarize(lr);
      }
    } catch (...) {
      const auto message = what_of(std::current_exception());
      for (auto& row : out) {
        row.failed = true;
        row.error = message;
      }
      traces[i].clear();
    }
    rows[i] = std::move(out);
  });

  GridResult result;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (auto& row : rows[i]) result.rows.push_back(std::move(row));
    for (auto& trace : traces[i]) result.traces.push_back(std::move(trace));
  }
  return result;
}

CutoffResult run_cutoff_sweep(const ExperimentPlan& plan, const SynthTask& task) {
  plan.validate();
  if (std::find(plan.optimizers.begin(), plan.optimizers.end(), OptimizerKind::Pro) == plan.optimizers.end())
    throw Error("cutoff sweep needs PRO among the plan's optimizers");
  if (task.tuning.segments.empty() || task.tuning.segments.front().references.size() != 1)
    throw Error("cutoff sweep needs a single-reference task");
  const auto test = task.test.source();
  const auto config = plan.tuning_config(OptimizerKind::Pro);

  const std::size_t n = plan.cutoff_fractions.size();
  std::vector<std::vector<CutoffRow>> rows(n);
  std::vector<std::vector<TraceRecord>> traces(n);
  run_jobs(n, plan.threads, [&](std::size_t i) {
    const double fraction = plan.cutoff_fractions[i];
    std::vector<CutoffRow> out;
    try {
      const auto idx =
          select_indices_by_length(task.tuning.segments, {LengthCondition::CutoffLongest, fraction});
      const auto stats = dataset_stats(pick(task.tuning.segments, idx));
      const auto source = task.tuning.source(idx);
      for (int r = 0; r < plan.reruns; ++r) {
        auto result = tune_once(source, config, r);
        CutoffRow row;
        row.fraction = fraction;
        row.rerun = r;
        row.tune_verbosity = stats.verbosity;
        row.tune_mean_source_length = stats.mean_source_length;
        row.test = evaluate(test, result.weights, config.tie);
        out.push_back(row);
        traces[i].push_back({OptimizerKind::Pro, format_double(fraction), r, std::move(result.trace)});
      }
    } catch (...) {
      const auto message = what_of(std::current_exception());
      out.clear();
      traces[i].clear();
      for (int r = 0; r < plan.reruns; ++r) {
        CutoffRow row;
        row.fraction = fraction;
        row.rerun = r;
        row.failed = true;
        row.error = message;
        out.push_back(row);
      }
    }
    rows[i] = std::move(out);
  });

  CutoffResult result;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& row : rows[i]) result.rows.push_back(std::move(row));
    for (auto& trace : traces[i]) result.traces.push_back(std::move(trace));
  }
  return result;
}

}  // namespace lengthtune
