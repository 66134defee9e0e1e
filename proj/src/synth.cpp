#include "lengthtune/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "lengthtune/keyvalue.hpp"
#include "lengthtune/metrics.hpp"
#include "lengthtune/random.hpp"
#include "lengthtune/selection.hpp"

namespace lengthtune {

void SynthConfig::validate() const {
  if (n_tuning_segments < 2 || n_test_segments < 2) throw Error("synth: need at least two segments per split");
  if (min_source_length < 1 || max_source_length < min_source_length)
    throw Error("synth: bad source length range");
  if (n_references != 1 && n_references != 4) throw Error("synth: n_references must be 1 or 4");
  if (candidates_per_segment < 1) throw Error("synth: candidates_per_segment must be >= 1");
  if (length_spread < 0.0 || length_spread >= 1.0) throw Error("synth: length_spread must be in [0, 1)");
  if (min_error_rate < 0.0 || max_error_rate < min_error_rate || max_error_rate > 1.0)
    throw Error("synth: bad error rate range");
  if (noise_features < 0 || noise_scale < 0.0) throw Error("synth: bad noise settings");
  if (reference_jitter < 0.0 || reference_jitter >= 1.0) throw Error("synth: reference_jitter must be in [0, 1)");
  if (vocabulary_size < 10) throw Error("synth: vocabulary too small");
}

double SynthConfig::verbosity(int source_length) const {
  return std::max(0.05, verbosity_intercept + verbosity_slope * source_length);
}

double SynthConfig::natural_verbosity() const {
  if (system_verbosity > 0.0) return system_verbosity;
  return verbosity((min_source_length + max_source_length + 1) / 2);
}

StaticNBestSource SynthSplit::source() const { return StaticNBestSource(segments, pools); }

StaticNBestSource SynthSplit::source(const std::vector<std::size_t>& indices) const {
  std::vector<Segment> segs;
  std::vector<NBestList> lists;
  for (std::size_t i : indices) {
    segs.push_back(segments.at(i));
    lists.push_back(pools.at(i));
  }
  return StaticNBestSource(std::move(segs), std::move(lists));
}

namespace {

std::string word(const char* prefix, std::uint64_t id) { return prefix + std::to_string(id); }

std::string pick_genre(Rng& rng, double t) {
  const double p_speech = 0.5 * (1.0 - t);
  const double p_news = 0.2 + 0.5 * t;
  const double u = uniform01(rng);
  if (u < p_speech) return "speech";
  if (u < p_speech + p_news) return "news";
  return "web";
}

// Deletes random positions until `tokens` has `target` entries, or inserts
// words from `fresh` at random positions until it does.
template <class Fresh>
void resize_randomly(Tokens& tokens, std::size_t target, Rng& rng, Fresh fresh) {
  while (tokens.size() > target) tokens.erase(tokens.begin() + static_cast<std::ptrdiff_t>(uniform_index(rng, tokens.size())));
  while (tokens.size() < target)
    tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(uniform_index(rng, tokens.size() + 1)), fresh());
}

// Shortens by cutting one contiguous span, or lengthens by scattering
// words from `fresh`.
template <class Fresh>
void resize_candidate(Tokens& tokens, std::size_t target, Rng& rng, Fresh fresh) {
  if (tokens.size() > target) {
    const std::size_t cut = tokens.size() - target;
    const auto start = static_cast<std::ptrdiff_t>(uniform_index(rng, target + 1));
    tokens.erase(tokens.begin() + start, tokens.begin() + start + static_cast<std::ptrdiff_t>(cut));
  }
  resize_randomly(tokens, target, rng, fresh);
}

SynthSplit generate_split(const SynthConfig& c, std::size_t n, std::size_t first_id, Rng& rng) {
  SynthSplit split;
  const auto vocab = static_cast<std::uint64_t>(c.vocabulary_size);
  auto ref_word = [&] { return word("w", uniform_index(rng, vocab)); };
  auto junk_word = [&] { return word("x", uniform_index(rng, vocab)); };
  const double natural = c.natural_verbosity();

  std::vector<std::string> noise_names;
  for (int k = 0; k < c.noise_features; ++k) noise_names.push_back("noise" + std::to_string(k));

  for (std::size_t s = 0; s < n; ++s) {
    Segment seg;
    seg.id = first_id + s;
    const int L = c.min_source_length +
                  static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(c.max_source_length - c.min_source_length + 1)));
    const double t = c.max_source_length > c.min_source_length
                         ? static_cast<double>(L - c.min_source_length) / (c.max_source_length - c.min_source_length)
                         : 0.5;
    split.genres.push_back(pick_genre(rng, t));
    for (int i = 0; i < L; ++i) seg.source.push_back(word("s", uniform_index(rng, vocab)));

    // With several references each length is jittered around the target;
    // the first reference is the one candidates are built from.
    const double target = c.verbosity(L) * L;
    auto ref_length = [&] {
      const double factor = c.n_references > 1 ? uniform(rng, 1.0 - c.reference_jitter, 1.0 + c.reference_jitter) : 1.0;
      return static_cast<std::size_t>(std::max<long long>(1, std::llround(factor * target)));
    };
    const std::size_t r = ref_length();
    Tokens ref0;
    for (std::size_t i = 0; i < r; ++i) ref0.push_back(ref_word());
    seg.references.push_back(ref0);
    for (int k = 1; k < c.n_references; ++k) {
      Tokens ref = ref0;
      for (auto& tok : ref)
        if (uniform01(rng) < c.reference_variation) tok = ref_word();
      resize_randomly(ref, ref_length(), rng, ref_word);
      seg.references.push_back(std::move(ref));
    }

    // Candidate lengths on an even grid around the natural output length,
    // widened where needed so the pool brackets the first reference.
    const int m = c.candidates_per_segment;
    const double anchor = natural * L;
    std::vector<std::size_t> lengths(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
      const double rel = m > 1 ? 1.0 - c.length_spread + 2.0 * c.length_spread * k / (m - 1) : 1.0;
      lengths[static_cast<std::size_t>(k)] = static_cast<std::size_t>(std::max<long long>(1, std::llround(rel * anchor)));
    }
    if (m > 1 && c.length_spread > 0.0) {
      if (lengths.front() >= r) lengths.front() = r > 1 ? r - 1 : 0;
      if (lengths.back() <= r) lengths.back() = r + 1;
    }

    NBestList pool;
    pool.segment_id = seg.id;
    const std::vector<Tokens> first_ref{ref0};
    for (std::size_t len : lengths) {
      Tokens cand = ref0;
      resize_candidate(cand, len, rng, junk_word);
      const double rel_error = std::abs(static_cast<double>(len) - static_cast<double>(r)) / static_cast<double>(r);
      const double signed_rel = (static_cast<double>(len) - static_cast<double>(r)) / static_cast<double>(r);
      const double err = std::clamp(uniform(rng, c.min_error_rate, c.max_error_rate) + c.length_error_rate * rel_error +
                                        c.error_length_slope * signed_rel,
                                    0.0, 0.95);
      for (auto& tok : cand)
        if (tok.front() == 'w' && uniform01(rng) < err) tok = junk_word();

      Hypothesis hyp;
      hyp.segment_id = seg.id;
      const auto matches = static_cast<double>(clipped_matches(cand, first_ref, 1));
      const double noise = c.noise_scale *
                           std::pow(static_cast<double>(std::max<std::size_t>(len, 1)), c.noise_length_exponent) *
                           standard_normal(rng);
      hyp.features.set(kOverlap, matches + noise);
      hyp.features.set(kWordPenalty, -static_cast<double>(cand.size()));
      for (const auto& name : noise_names) hyp.features.set(name, standard_normal(rng));
      hyp.tokens = std::move(cand);
      pool.hypotheses.push_back(std::move(hyp));
    }
    split.segments.push_back(std::move(seg));
    split.pools.push_back(std::move(pool));
  }
  return split;
}

}  // namespace

SynthTask generate_task(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  SynthTask task;
  task.config = config;
  task.tuning = generate_split(config, config.n_tuning_segments, 0, rng);
  task.test = generate_split(config, config.n_test_segments, config.n_tuning_segments, rng);
  for (const auto& name : task.tuning.pools.front().hypotheses.front().features.names())
    task.oracle_weights.set(name, name == kOverlap ? 1.0 : 0.0);
  return task;
}

SynthConfig mirror_verbosity(const SynthConfig& config) {
  double sum_l = 0.0, sum_l2 = 0.0;
  for (int L = config.min_source_length; L <= config.max_source_length; ++L) {
    sum_l += L;
    sum_l2 += static_cast<double>(L) * L;
  }
  SynthConfig out = config;
  out.verbosity_slope = -config.verbosity_slope;
  out.verbosity_intercept = config.verbosity_intercept + 2.0 * config.verbosity_slope * sum_l2 / sum_l;
  return out;
}

bool expressiveness_check(const SynthSplit& split) {
  const double vb = dataset_stats(split.segments).verbosity;
  const auto names = split.pools.front().hypotheses.front().features.names();
  if (std::find(names.begin(), names.end(), kWordPenalty) == names.end()) return false;

  std::vector<double> hvb;
  constexpr int kSteps = 50;
  for (int k = 0; k < kSteps; ++k) {
    const double theta = -0.49 * std::numbers::pi + 0.98 * std::numbers::pi * k / (kSteps - 1);
    WeightVector w;
    for (const auto& name : names) w.set(name, name == kOverlap ? 1.0 : 0.0);
    w.set(kWordPenalty, std::tan(theta));
    std::int64_t hyp = 0, src = 0;
    for (std::size_t i = 0; i < split.pools.size(); ++i) {
      hyp += static_cast<std::int64_t>(rerank(split.pools[i], w).tokens.size());
      src += static_cast<std::int64_t>(split.segments[i].source.size());
    }
    hvb.push_back(static_cast<double>(hyp) / static_cast<double>(src));
  }
  for (std::size_t k = 1; k < hvb.size(); ++k)
    if (hvb[k] > hvb[k - 1]) return false;
  return hvb.front() >= 1.2 * vb && hvb.back() <= 0.8 * vb;
}

bool expressiveness_check(const SynthTask& task) { return expressiveness_check(task.tuning); }

std::string config_to_text(const SynthConfig& c) {
  std::ostringstream out;
  out << "n_tuning_segments = " << c.n_tuning_segments << '\n'
      << "n_test_segments = " << c.n_test_segments << '\n'
      << "min_source_length = " << c.min_source_length << '\n'
      << "max_source_length = " << c.max_source_length << '\n'
      << "verbosity_intercept = " << format_double(c.verbosity_intercept) << '\n'
      << "verbosity_slope = " << format_double(c.verbosity_slope) << '\n'
      << "n_references = " << c.n_references << '\n'
      << "reference_jitter = " << format_double(c.reference_jitter) << '\n'
      << "reference_variation = " << format_double(c.reference_variation) << '\n'
      << "candidates_per_segment = " << c.candidates_per_segment << '\n'
      << "length_spread = " << format_double(c.length_spread) << '\n'
      << "system_verbosity = " << format_double(c.system_verbosity) << '\n'
      << "min_error_rate = " << format_double(c.min_error_rate) << '\n'
      << "max_error_rate = " << format_double(c.max_error_rate) << '\n'
      << "length_error_rate = " << format_double(c.length_error_rate) << '\n'
      << "error_length_slope = " << format_double(c.error_length_slope) << '\n'
      << "noise_features = " << c.noise_features << '\n'
      << "noise_scale = " << format_double(c.noise_scale) << '\n'
      << "noise_length_exponent = " << format_double(c.noise_length_exponent) << '\n'
      << "vocabulary_size = " << c.vocabulary_size << '\n'
      << "seed = " << c.seed << '\n';
  return out.str();
}

namespace {

SynthConfig config_from(const KeyValues& kv) {
  SynthConfig c;
  c.n_tuning_segments = kv.get_uint("n_tuning_segments", c.n_tuning_segments);
  c.n_test_segments = kv.get_uint("n_test_segments", c.n_test_segments);
  c.min_source_length = static_cast<int>(kv.get_int("min_source_length", c.min_source_length));
  c.max_source_length = static_cast<int>(kv.get_int("max_source_length", c.max_source_length));
  c.verbosity_intercept = kv.get_double("verbosity_intercept", c.verbosity_intercept);
  c.verbosity_slope = kv.get_double("verbosity_slope", c.verbosity_slope);
  c.n_references = static_cast<int>(kv.get_int("n_references", c.n_references));
  c.reference_jitter = kv.get_double("reference_jitter", c.reference_jitter);
  c.reference_variation = kv.get_double("reference_variation", c.reference_variation);
  c.candidates_per_segment = static_cast<int>(kv.get_int("candidates_per_segment", c.candidates_per_segment));
  c.length_spread = kv.get_double("length_spread", c.length_spread);
  c.system_verbosity = kv.get_double("system_verbosity", c.system_verbosity);
  c.min_error_rate = kv.get_double("min_error_rate", c.min_error_rate);
  c.max_error_rate = kv.get_double("max_error_rate", c.max_error_rate);
  c.length_error_rate = kv.get_double("length_error_rate", c.length_error_rate);
  c.error_length_slope = kv.get_double("error_length_slope", c.error_length_slope);
  c.noise_features = static_cast<int>(kv.get_int("noise_features", c.noise_features));
  c.noise_scale = kv.get_double("noise_scale", c.noise_scale);
  c.noise_length_exponent = kv.get_double("noise_length_exponent", c.noise_length_exponent);
  c.vocabulary_size = static_cast<int>(kv.get_int("vocabulary_size", c.vocabulary_size));
  c.seed = kv.get_uint("seed", c.seed);
  return c;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& line : lines) out << line << '\n';
}

void write_split(const SynthSplit& split, const std::filesystem::path& dir, const std::string& prefix) {
  std::vector<std::string> src;
  for (const auto& seg : split.segments) src.push_back(join(seg.source));
  write_lines(dir / (prefix + ".src"), src);
  const std::size_t n_refs = split.segments.front().references.size();
  for (std::size_t k = 0; k < n_refs; ++k) {
    std::vector<std::string> refs;
    for (const auto& seg : split.segments) refs.push_back(join(seg.references[k]));
    write_lines(dir / (prefix + ".ref" + std::to_string(k)), refs);
  }
  write_lines(dir / (prefix + ".genre"), split.genres);
  std::ofstream nbest(dir / (prefix + ".nbest"));
  if (!nbest) throw Error("cannot write " + (dir / (prefix + ".nbest")).string());
  write_nbest(nbest, split.pools);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  return in;
}

SynthSplit read_split(const std::filesystem::path& dir, const std::string& prefix, int n_refs, std::size_t first_id) {
  auto src = open_input(dir / (prefix + ".src"));
  std::vector<std::ifstream> ref_files;
  for (int k = 0; k < n_refs; ++k) ref_files.push_back(open_input(dir / (prefix + ".ref" + std::to_string(k))));
  std::vector<std::istream*> refs;
  for (auto& f : ref_files) refs.push_back(&f);
  SynthSplit split;
  split.segments = read_segments(src, refs);
  for (auto& seg : split.segments) seg.id += first_id;
  auto nbest = open_input(dir / (prefix + ".nbest"));
  split.pools = parse_nbest(nbest);
  auto genres = open_input(dir / (prefix + ".genre"));
  for (std::string line; std::getline(genres, line);) split.genres.push_back(line);
  if (split.pools.size() != split.segments.size()) throw Error(prefix + ": n-best and segment counts differ");
  for (std::size_t i = 0; i < split.pools.size(); ++i)
    if (split.pools[i].segment_id != split.segments[i].id) throw Error(prefix + ": n-best segment ids out of order");
  return split;
}

}  // namespace

SynthConfig config_from_text(const std::string& text) {
  auto kv = KeyValues::parse(text);
  std::set<std::string, std::less<>> known;
  const auto defaults = KeyValues::parse(config_to_text(SynthConfig{}));
  for (const auto& entry : defaults.entries()) known.insert(entry.first);
  kv.require_known(known);
  return config_from(kv);
}

void write_task(const SynthTask& task, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream manifest(dir / "manifest.txt");
    if (!manifest) throw Error("cannot write " + (dir / "manifest.txt").string());
    manifest << "# lengthtune synthetic task\n" << config_to_text(task.config);
    for (const auto& [name, value] : task.oracle_weights) manifest << "oracle." << name << " = " << format_double(value) << '\n';
  }
  write_split(task.tuning, dir, "tune");
  write_split(task.test, dir, "test");
}

SynthTask read_task(const std::filesystem::path& dir) {
  auto in = open_input(dir / "manifest.txt");
  std::stringstream buf;
  buf << in.rdbuf();
  auto kv = KeyValues::parse(buf.str());
  SynthTask task;
  task.config = config_from(kv);
  for (const auto& [key, value] : kv.entries())
    if (key.rfind("oracle.", 0) == 0) task.oracle_weights.set(key.substr(7), kv.get_double(key, 0.0));
  task.tuning = read_split(dir, "tune", task.config.n_references, 0);
  task.test = read_split(dir, "test", task.config.n_references, task.config.n_tuning_segments);
  return task;
}

}  // namespace lengthtune
