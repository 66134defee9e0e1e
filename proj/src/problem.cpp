#include "lengthtune/problem.hpp"

#include <algorithm>
#include <unordered_map>

namespace lengthtune {

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

TuningProblem::TuningProblem(std::vector<std::string> feature_names, std::span<const Segment> segments,
                             RefLengthTie tie)
    : names_(std::move(feature_names)) {
  if (!std::is_sorted(names_.begin(), names_.end()) ||
      std::adjacent_find(names_.begin(), names_.end()) != names_.end())
    throw Error("feature names must be sorted and unique");
  segments_.reserve(segments.size());
  slots_.reserve(segments.size());
  for (const auto& seg : segments) {
    if (!id_to_index_.emplace(seg.id, segments_.size()).second)
      throw Error("duplicate segment id " + std::to_string(seg.id));
    SegmentCandidates c;
    c.segment_id = seg.id;
    c.source_length = static_cast<std::int64_t>(seg.source.size());
    segments_.push_back(std::move(c));
    slots_.push_back({std::make_shared<const ReferenceSet>(seg.references, tie), {}});
  }
}

TuningProblem TuningProblem::from_nbest(std::span<const NBestList> nbests, std::span<const Segment> segments,
                                        RefLengthTie tie) {
  std::vector<std::string> names;
  for (const auto& list : nbests)
    if (!list.hypotheses.empty()) {
      names = list.hypotheses.front().features.names();
      break;
    }
  std::unordered_map<std::size_t, const Segment*> by_id;
  for (const auto& seg : segments) by_id[seg.id] = &seg;
  std::vector<Segment> used;
  for (const auto& list : nbests) {
    auto it = by_id.find(list.segment_id);
    if (it == by_id.end()) throw Error("n-best list for unknown segment " + std::to_string(list.segment_id));
    used.push_back(*it->second);
  }
  TuningProblem problem(std::move(names), used, tie);
  for (const auto& list : nbests) problem.add(list);
  return problem;
}

std::size_t TuningProblem::index_of(std::size_t segment_id) const {
  auto it = id_to_index_.find(segment_id);
  if (it == id_to_index_.end()) throw Error("unknown segment id " + std::to_string(segment_id));
  return it->second;
}

std::size_t TuningProblem::add(const NBestList& nbest) {
  const std::size_t idx = index_of(nbest.segment_id);
  auto& seg = segments_[idx];
  auto& slot = slots_[idx];
  std::size_t added = 0;
  for (const auto& hyp : nbest.hypotheses) {
    if (hyp.segment_id != nbest.segment_id)
      throw Error("hypothesis for segment " + std::to_string(hyp.segment_id) + " in list " +
                  std::to_string(nbest.segment_id));
    if (hyp.features.size() != names_.size())
      throw FeatureMismatch("hypothesis feature count differs from the tuning problem");
    std::string key = join(hyp.tokens);
    key += " |||";
    std::size_t col = 0;
    for (const auto& [name, value] : hyp.features) {
      if (name != names_[col++]) throw FeatureMismatch("hypothesis feature '" + name + "' not expected");
      key.push_back(' ');
      key += format_double(value);
    }
    if (!slot.seen.insert(std::move(key)).second) continue;
    for (const auto& kv : hyp.features) seg.features.push_back(kv.second);
    seg.stats.push_back(slot.refs->stats(hyp.tokens));
    seg.tokens.push_back(hyp.tokens);
    ++added;
  }
  return added;
}

std::size_t TuningProblem::num_candidates() const {
  std::size_t n = 0;
  for (const auto& s : segments_) n += s.size();
  return n;
}

std::vector<double> TuningProblem::dense(const WeightVector& w) const {
  if (w.size() != names_.size()) throw FeatureMismatch("weight vector does not match tuning features");
  std::vector<double> out;
  out.reserve(names_.size());
  std::size_t col = 0;
  for (const auto& [name, value] : w) {
    if (name != names_[col++]) throw FeatureMismatch("weight '" + name + "' not a tuning feature");
    out.push_back(value);
  }
  return out;
}

WeightVector TuningProblem::named(std::span<const double> w) const {
  if (w.size() != names_.size()) throw FeatureMismatch("dense weight size mismatch");
  WeightVector out;
  for (std::size_t i = 0; i < names_.size(); ++i) out.set(names_[i], w[i]);
  return out;
}

double TuningProblem::score(std::size_t seg, std::size_t hyp, std::span<const double> w) const {
  return dot(w, row(seg, hyp));
}

std::size_t TuningProblem::best(std::size_t seg, std::span<const double> w) const {
  const auto n = segments_[seg].size();
  std::size_t best = 0;
  double best_score = n ? score(seg, 0, w) : 0.0;
  for (std::size_t h = 1; h < n; ++h) {
    double s = score(seg, h, w);
    if (s > best_score) {
      best_score = s;
      best = h;
    }
  }
  return best;
}

std::vector<std::size_t> TuningProblem::best_all(std::span<const double> w) const {
  std::vector<std::size_t> out(segments_.size());
  for (std::size_t s = 0; s < segments_.size(); ++s) out[s] = best(s, w);
  return out;
}

BleuStats TuningProblem::corpus_stats(std::span<const double> w) const {
  BleuStats total;
  for (std::size_t s = 0; s < segments_.size(); ++s)
    if (segments_[s].size()) total += segments_[s].stats[best(s, w)];
  return total;
}

double TuningProblem::bleu(std::span<const double> w) const { return corpus_bleu(corpus_stats(w)); }

double TuningProblem::sentence_points(std::size_t seg, std::size_t hyp, Smoothing scheme) const {
  return 100.0 * sentence_bleu(segments_[seg].stats[hyp], scheme);
}

}  // namespace lengthtune
