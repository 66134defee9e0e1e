#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lengthtune/selection.hpp"
#include "lengthtune/synth.hpp"

using namespace lengthtune;
namespace fs = std::filesystem;

namespace {

SynthConfig small(std::size_t n = 200) {
  SynthConfig c;
  c.n_tuning_segments = n;
  c.n_test_segments = n;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("lengthtune_test_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<double> source_lengths(const SynthSplit& split) {
  std::vector<double> out;
  for (const auto& s : split.segments) out.push_back(static_cast<double>(s.source.size()));
  return out;
}

}  // namespace

TEST_CASE("generation is deterministic") {
  const auto a = generate_task(small(60));
  const auto b = generate_task(small(60));
  const auto da = scratch("det_a"), db = scratch("det_b");
  write_task(a, da);
  write_task(b, db);
  for (const auto& entry : fs::directory_iterator(da))
    CHECK(slurp(entry.path()) == slurp(db / entry.path().filename()));
  auto other = small(60);
  other.seed = 2;
  const auto dc = scratch("det_c");
  write_task(generate_task(other), dc);
  CHECK(slurp(da / "tune.nbest") != slurp(dc / "tune.nbest"));
  fs::remove_all(da);
  fs::remove_all(db);
  fs::remove_all(dc);
}

TEST_CASE("verbosity follows the configured slope") {
  // With a zero slope the only length dependence left is rounding to whole
  // tokens, round(a L) / L.
  auto flat = small(500);
  flat.verbosity_slope = 0.0;
  for (double a : {0.9, 1.1}) {
    flat.verbosity_intercept = a;
    const auto t0 = generate_task(flat);
    const auto lengths = source_lengths(t0.tuning);
    const auto vb = segment_verbosity(t0.tuning.segments);
    for (std::size_t i = 0; i < vb.size(); ++i)
      CHECK(vb[i] == std::floor(a * lengths[i] + 0.5) / lengths[i]);
    if (a == 1.1) CHECK(std::abs(pearson(lengths, vb)) < 0.1);
  }

  const auto t1 = generate_task(small(500));
  CHECK(pearson(source_lengths(t1.tuning), segment_verbosity(t1.tuning.segments)) > 0.9);

  auto neg = mirror_verbosity(small(500));
  const auto t2 = generate_task(neg);
  CHECK(pearson(source_lengths(t2.tuning), segment_verbosity(t2.tuning.segments)) < -0.9);
}

TEST_CASE("reference lengths follow the model") {
  for (int refs : {1, 4}) {
    auto c = small(300);
    c.n_references = refs;
    const auto task = generate_task(c);
    for (const auto* split : {&task.tuning, &task.test})
      for (const auto& seg : split->segments) {
        REQUIRE(seg.references.size() == static_cast<std::size_t>(refs));
        const int L = static_cast<int>(seg.source.size());
        CHECK(L >= c.min_source_length);
        CHECK(L <= c.max_source_length);
        const double target = c.verbosity(L) * L;
        const double bound = 0.5 + (refs > 1 ? c.reference_jitter * target : 0.0) + 1e-9;
        for (const auto& ref : seg.references) {
          CHECK(!ref.empty());
          CHECK(std::abs(static_cast<double>(ref.size()) - std::max(1.0, target)) <= std::max(bound, 1.0));
        }
      }
  }
}

TEST_CASE("candidate pools") {
  const auto task = generate_task(small(300));
  std::set<std::size_t> tune_ids;
  for (const auto& s : task.tuning.segments) tune_ids.insert(s.id);
  for (const auto& s : task.test.segments) CHECK(tune_ids.count(s.id) == 0);

  const auto names = task.tuning.pools.front().hypotheses.front().features.names();
  CHECK(std::find(names.begin(), names.end(), kWordPenalty) != names.end());
  CHECK(std::find(names.begin(), names.end(), kOverlap) != names.end());
  CHECK(names.size() == static_cast<std::size_t>(2 + task.config.noise_features));
  CHECK(task.oracle_weights.same_names(task.tuning.pools.front().hypotheses.front().features));

  for (const auto* split : {&task.tuning, &task.test}) {
    REQUIRE(split->pools.size() == split->segments.size());
    CHECK(split->genres.size() == split->segments.size());
    for (std::size_t i = 0; i < split->pools.size(); ++i) {
      const auto& pool = split->pools[i];
      const auto ref_len = split->segments[i].references.front().size();
      CHECK(pool.segment_id == split->segments[i].id);
      CHECK(pool.hypotheses.size() == static_cast<std::size_t>(task.config.candidates_per_segment));
      bool shorter = false, longer = false;
      for (const auto& h : pool.hypotheses) {
        CHECK(h.features.names() == names);
        CHECK(h.features.at(kWordPenalty) == -static_cast<double>(h.tokens.size()));
        shorter |= h.tokens.size() < ref_len;
        longer |= h.tokens.size() > ref_len;
      }
      CHECK(shorter);
      CHECK(longer);
    }
  }
}

TEST_CASE("expressiveness check") {
  const auto task = generate_task(small(300));
  CHECK(expressiveness_check(task));

  SynthSplit same = task.tuning;
  for (auto& pool : same.pools)
    for (auto& h : pool.hypotheses) {
      h.tokens = pool.hypotheses.front().tokens;
      h.features.set(kWordPenalty, -static_cast<double>(h.tokens.size()));
    }
  CHECK_FALSE(expressiveness_check(same));

  SynthSplit no_short = task.tuning;
  for (std::size_t i = 0; i < no_short.pools.size(); ++i) {
    const auto ref_len = no_short.segments[i].references.front().size();
    auto& hyps = no_short.pools[i].hypotheses;
    std::erase_if(hyps, [&](const Hypothesis& h) { return h.tokens.size() < ref_len; });
  }
  CHECK_FALSE(expressiveness_check(no_short));
}

TEST_CASE("mirrored verbosity keeps the overall verbosity") {
  const SynthConfig c;
  const auto m = mirror_verbosity(c);
  CHECK(m.verbosity_slope == -c.verbosity_slope);
  double a = 0.0, b = 0.0;
  for (int L = c.min_source_length; L <= c.max_source_length; ++L) {
    a += c.verbosity(L) * L;
    b += m.verbosity(L) * L;
  }
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
  CHECK(m.verbosity(c.min_source_length) > m.verbosity(c.max_source_length));
}

TEST_CASE("task files round trip") {
  auto c = small(40);
  c.n_references = 4;
  const auto task = generate_task(c);
  const auto dir = scratch("roundtrip");
  write_task(task, dir);
  const auto back = read_task(dir);
  CHECK(config_to_text(back.config) == config_to_text(task.config));
  CHECK(back.oracle_weights == task.oracle_weights);
  for (const auto& [a, b] : {std::pair{&task.tuning, &back.tuning}, std::pair{&task.test, &back.test}}) {
    REQUIRE(a->segments.size() == b->segments.size());
    for (std::size_t i = 0; i < a->segments.size(); ++i) {
      CHECK(a->segments[i].id == b->segments[i].id);
      CHECK(a->segments[i].source == b->segments[i].source);
      CHECK(a->segments[i].references == b->segments[i].references);
      CHECK(a->pools[i].hypotheses == b->pools[i].hypotheses);
    }
    CHECK(a->genres == b->genres);
  }
  fs::remove_all(dir);
}

TEST_CASE("configuration text") {
  SynthConfig c;
  c.verbosity_slope = -0.0125;
  c.n_references = 4;
  c.seed = 99;
  const auto back = config_from_text(config_to_text(c));
  CHECK(config_to_text(back) == config_to_text(c));
  CHECK_THROWS_AS(config_from_text("verbosity_slop = 0.1\n"), Error);

  SynthConfig bad;
  bad.min_source_length = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = SynthConfig{};
  bad.max_source_length = 2;
  CHECK_THROWS_AS(bad.validate(), Error);
}
