#include "lengthtune/tuning.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace lengthtune {

WeightVector NBestSource::initial_weights() const {
  WeightVector w;
  for (const auto& name : feature_names()) w.set(name, 0.0);
  return w;
}

StaticNBestSource::StaticNBestSource(std::vector<Segment> segments, std::vector<NBestList> lists)
    : segments_(std::move(segments)) {
  validate_segments(segments_);
  std::unordered_map<std::size_t, std::size_t> by_id;
  for (std::size_t i = 0; i < lists.size(); ++i) by_id[lists[i].segment_id] = i;
  for (const auto& seg : segments_) {
    auto it = by_id.find(seg.id);
    if (it == by_id.end() || lists[it->second].hypotheses.empty())
      throw Error("no n-best list for segment " + std::to_string(seg.id));
    lists_.push_back(std::move(lists[it->second]));
  }
  names_ = lists_.front().hypotheses.front().features.names();
  for (const auto& list : lists_)
    for (const auto& hyp : list.hypotheses)
      if (hyp.features.names() != names_) throw FeatureMismatch("n-best lists disagree on feature names");
}

std::vector<NBestList> StaticNBestSource::decode(const WeightVector& w, std::size_t nbest_size) const {
  std::vector<NBestList> out;
  out.reserve(lists_.size());
  for (const auto& list : lists_) out.push_back(top_k(list, w, nbest_size));
  return out;
}

NBestList top_k(const NBestList& pool, const WeightVector& w, std::size_t k) {
  std::vector<double> scores;
  scores.reserve(pool.hypotheses.size());
  for (const auto& hyp : pool.hypotheses) scores.push_back(dot(w, hyp.features));
  std::vector<std::size_t> order(pool.hypotheses.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  if (order.size() > k) order.resize(k);
  NBestList out;
  out.segment_id = pool.segment_id;
  out.hypotheses.reserve(order.size());
  for (std::size_t i : order) out.hypotheses.push_back(pool.hypotheses[i]);
  return out;
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "mert") return OptimizerKind::Mert;
  if (name == "pro") return OptimizerKind::Pro;
  throw Error("unknown optimizer '" + std::string(name) + "'");
}

std::string_view optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::Mert ? "mert" : "pro"; }

Evaluation evaluate(const NBestSource& source, const WeightVector& w, RefLengthTie tie) {
  const auto& segments = source.segments();
  auto lists = source.decode(w, 1);
  if (lists.size() != segments.size()) throw Error("decoder returned the wrong number of lists");
  std::vector<Tokens> top;
  top.reserve(lists.size());
  BleuStats stats;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    if (lists[i].hypotheses.empty()) throw Error("decoder returned an empty list");
    top.push_back(lists[i].hypotheses.front().tokens);
    stats += compute_stats(top.back(), segments[i].references, tie);
  }
  auto diag = hypothesis_diagnostics(segments, top, tie);
  Evaluation e;
  e.bleu = corpus_bleu(stats);
  e.bp = brevity_penalty(stats.hyp_len, stats.ref_len);
  e.hvb = diag.hvb;
  e.lr = diag.lr;
  return e;
}

std::uint64_t rerun_seed(std::uint64_t seed, int rerun) { return derive_seed(seed, static_cast<std::uint64_t>(rerun)); }

std::uint64_t iteration_seed(std::uint64_t rerun_seed, int iteration) {
  return derive_seed(rerun_seed, 0x1000u + static_cast<std::uint64_t>(iteration));
}

RerunResult tune_once(const NBestSource& tuning, const TuningConfig& config, int rerun) {
  if (config.max_iterations < 1) throw Error("max_iterations must be >= 1");
  if (config.nbest_size < 1) throw Error("nbest_size must be >= 1");
  if (config.optimizer == OptimizerKind::Pro) config.pro.validate();

  RerunResult result;
  result.rerun = rerun;
  result.seed = rerun_seed(config.seed, rerun);
  Rng rng(result.seed);

  TuningProblem problem(tuning.feature_names(), tuning.segments(), config.tie);
  WeightVector w = tuning.initial_weights();
  for (int it = 1; it <= config.max_iterations; ++it) {
    for (const auto& list : tuning.decode(w, config.nbest_size)) problem.add(list);
    const auto dense = problem.dense(w);

    IterationRecord record;
    record.iteration = it;
    std::vector<double> next;
    if (config.optimizer == OptimizerKind::Mert) {
      MertConfig mert = config.mert;
      mert.seed = iteration_seed(result.seed, it);
      next = mert_iterate(problem, dense, mert).weights;
    } else {
      auto step = pro_iterate(problem, dense, config.pro, rng);
      next = std::move(step.weights);
      record.pairs = step.pairs;
    }

    WeightVector updated = problem.named(next);
    const double moved = max_abs_difference(updated, w);
    w = std::move(updated);
    record.weights = w;
    record.tuning = evaluate(tuning, w, config.tie);
    record.candidates = problem.num_candidates();
    result.trace.push_back(std::move(record));
    if (moved < config.convergence_tolerance) {
      result.converged = true;
      break;
    }
  }
  result.weights = w;
  return result;
}

TuningResult run_tuning(const NBestSource& tuning, const TuningConfig& config, const NBestSource* test) {
  if (config.reruns < 1) throw Error("reruns must be >= 1");
  TuningResult out;
  for (int k = 0; k < config.reruns; ++k) {
    auto r = tune_once(tuning, config, k);
    if (test) {
      r.test = evaluate(*test, r.weights, config.tie);
      r.has_test = true;
    }
    out.reruns.push_back(std::move(r));
  }
  if (test) {
    const double n = static_cast<double>(out.reruns.size());
    for (const auto& r : out.reruns) {
      out.mean_test.bleu += r.test.bleu / n;
      out.mean_test.bp += r.test.bp / n;
      out.mean_test.hvb += r.test.hvb / n;
      out.mean_test.lr += r.test.lr / n;
    }
  }
  return out;
}

}  // namespace lengthtune
