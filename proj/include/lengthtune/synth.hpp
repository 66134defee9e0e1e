#pragma once

// Desk-scale stand-in for a decoder and its corpora. Each segment gets a
// source length, references whose length follows a linear verbosity model,
// and a fixed candidate pool. "Decoding" with a weight vector means taking
// the top of the pool under that vector.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lengthtune/corpus.hpp"
#include "lengthtune/tuning.hpp"

namespace lengthtune {

struct SynthConfig {
  std::size_t n_tuning_segments = 500;
  std::size_t n_test_segments = 500;
  int min_source_length = 3;
  int max_source_length = 50;
  // Reference words per source word for a segment of source length L:
  // vb(L) = intercept + slope * L. A positive slope makes long sentences
  // more verbose, a negative one short sentences.
  double verbosity_intercept = 0.9;
  double verbosity_slope = 0.008;
  int n_references = 1;
  // With several references, each reference length is the target scaled by a
  // factor drawn from [1 - jitter, 1 + jitter].
  double reference_jitter = 0.3;
  double reference_variation = 0.2;  // extra references: share of substituted words
  int candidates_per_segment = 20;
  // Candidate lengths are spread evenly over [1 - s, 1 + s] times the
  // system's natural output length for the segment.
  double length_spread = 0.4;
  // Natural output words per source word; <= 0 means vb at the mid length.
  double system_verbosity = 0.0;
  double min_error_rate = 0.05;
  double max_error_rate = 0.45;
  // Extra error rate per unit of relative length error against the reference.
  double length_error_rate = 0.5;
  // Extra error rate per unit of signed relative length (len - ref) / ref, so
  // positive values make shorter candidates more precise.
  double error_length_slope = 0.3;
  int noise_features = 3;
  // The overlap feature's noise has standard deviation
  // noise_scale * length^noise_length_exponent.
  double noise_scale = 0.5;
  double noise_length_exponent = 1.0;
  int vocabulary_size = 5000;
  std::uint64_t seed = 1;

  void validate() const;
  double verbosity(int source_length) const;
  double natural_verbosity() const;
};

struct SynthSplit {
  std::vector<Segment> segments;
  std::vector<NBestList> pools;
  std::vector<std::string> genres;

  // Pools restricted to `indices` (document order), as a decodable source.
  StaticNBestSource source() const;
  StaticNBestSource source(const std::vector<std::size_t>& indices) const;
};

struct SynthTask {
  SynthConfig config;
  SynthSplit tuning;
  SynthSplit test;
  WeightVector oracle_weights;
};

inline constexpr const char* kWordPenalty = "wp";
inline constexpr const char* kOverlap = "overlap";

SynthTask generate_task(const SynthConfig& config);

// The same task family with the verbosity slope negated and the intercept
// moved so that the token-weighted verbosity over the source length range is
// unchanged: long sentences become the less verbose ones.
SynthConfig mirror_verbosity(const SynthConfig& config);

// True when moving only the word-penalty weight sweeps tuning-set hvb
// monotonically over at least [0.8 vb, 1.2 vb].
bool expressiveness_check(const SynthTask& task);
bool expressiveness_check(const SynthSplit& split);

// Files: {tune,test}.src, .ref<k>, .nbest, .genre, plus manifest.txt with
// the configuration and oracle weights.
void write_task(const SynthTask& task, const std::filesystem::path& dir);
SynthTask read_task(const std::filesystem::path& dir);

// key=value lines, as in the manifest. Unknown keys are errors.
std::string config_to_text(const SynthConfig& config);
SynthConfig config_from_text(const std::string& text);

}  // namespace lengthtune
