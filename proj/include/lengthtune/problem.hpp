#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lengthtune/corpus.hpp"
#include "lengthtune/metrics.hpp"

namespace lengthtune {

// Dense tuning set: accumulated candidates per segment with feature rows in
// sorted-name column order and their BLEU statistics against the segment's
// references. Weight vectors used with it are dense in the same order.
class TuningProblem {
 public:
  struct SegmentCandidates {
    std::size_t segment_id = 0;
    std::int64_t source_length = 0;
    std::vector<double> features;  // row-major, size() * dim
    std::vector<BleuStats> stats;
    std::vector<Tokens> tokens;

    std::size_t size() const { return stats.size(); }
  };

  TuningProblem(std::vector<std::string> feature_names, std::span<const Segment> segments,
                RefLengthTie tie = RefLengthTie::Shorter);

  // Builds a problem whose segments are exactly those of `nbests`.
  static TuningProblem from_nbest(std::span<const NBestList> nbests, std::span<const Segment> segments,
                                  RefLengthTie tie = RefLengthTie::Shorter);

  // Adds hypotheses not already present for their segment. Returns the count
  // added. Throws when a segment id is unknown or feature names differ.
  std::size_t add(const NBestList& nbest);

  const std::vector<std::string>& feature_names() const { return names_; }
  std::size_t dim() const { return names_.size(); }
  std::size_t num_segments() const { return segments_.size(); }
  const SegmentCandidates& segment(std::size_t i) const { return segments_[i]; }
  const std::vector<SegmentCandidates>& segments() const { return segments_; }
  std::size_t num_candidates() const;

  std::vector<double> dense(const WeightVector& w) const;
  WeightVector named(std::span<const double> w) const;

  std::span<const double> row(std::size_t seg, std::size_t hyp) const {
    const auto& s = segments_[seg];
    return {s.features.data() + hyp * dim(), dim()};
  }
  double score(std::size_t seg, std::size_t hyp, std::span<const double> w) const;

  // Argmax per segment, lowest index on ties. Segments without candidates
  // are skipped by the aggregate functions below.
  std::size_t best(std::size_t seg, std::span<const double> w) const;
  std::vector<std::size_t> best_all(std::span<const double> w) const;
  BleuStats corpus_stats(std::span<const double> w) const;
  double bleu(std::span<const double> w) const;

  // Sentence-level metric of one candidate in points (0..100).
  double sentence_points(std::size_t seg, std::size_t hyp, Smoothing scheme) const;

 private:
  struct Slot {
    std::shared_ptr<const ReferenceSet> refs;
    std::unordered_set<std::string> seen;
  };

  std::size_t index_of(std::size_t segment_id) const;

  std::vector<std::string> names_;
  std::vector<SegmentCandidates> segments_;
  std::vector<Slot> slots_;
  std::unordered_map<std::size_t, std::size_t> id_to_index_;
};

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace lengthtune
