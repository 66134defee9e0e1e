#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "lengthtune/mert.hpp"
#include "lengthtune/pro.hpp"
#include "oracles.hpp"

using namespace lengthtune;

namespace {

using oracle::Instance;
using oracle::random_instance;

TuningProblem problem_of(const Instance& inst) {
  TuningProblem p(inst.names, inst.segments);
  for (const auto& l : inst.lists) p.add(l);
  return p;
}

}  // namespace

TEST_CASE("upper envelope examples") {
  const Line one[] = {{3.0, 1.0}};
  auto env = upper_envelope(one);
  REQUIRE(env.size() == 1);
  CHECK(std::isinf(env[0].left));
  CHECK(std::isinf(env[0].right));

  const Line two[] = {{2.0, 0.0}, {0.0, 1.0}};
  env = upper_envelope(two);
  REQUIRE(env.size() == 2);
  CHECK(env[0].winner == 1);
  CHECK(env[0].right == 0.5);
  CHECK(env[1].winner == 0);
  CHECK(env[1].left == 0.5);

  const Line same[] = {{1.0, 2.0}, {1.0, 2.0}};
  env = upper_envelope(same);
  REQUIRE(env.size() == 1);
  CHECK(env[0].winner == 0);
}

TEST_CASE("envelope winners are the pointwise argmax") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> count(1, 12), coef(-6, 6);
  std::uniform_real_distribution<double> gamma(-20, 20);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Line> lines(static_cast<std::size_t>(count(rng)));
    for (auto& l : lines) l = {static_cast<double>(coef(rng)), static_cast<double>(coef(rng))};
    const auto env = upper_envelope(lines);
    for (std::size_t k = 1; k < env.size(); ++k) CHECK(env[k].left == env[k - 1].right);
    for (int probe = 0; probe < 50; ++probe) {
      const double g = gamma(rng);
      const auto it = std::find_if(env.begin(), env.end(), [&](const EnvelopePiece& p) { return g >= p.left && g < p.right; });
      REQUIRE(it != env.end());
      double best = -1e300;
      for (const auto& l : lines) best = std::max(best, l.intercept + g * l.slope);
      const auto& w = lines[it->winner];
      CHECK(w.intercept + g * w.slope == doctest::Approx(best).epsilon(1e-12));
    }
  }
}

TEST_CASE("mert_envelope builds lines from the n-best list") {
  NBestList list{0, {}};
  Hypothesis a, b;
  a.features = FeatureVector{{"x", 0.0}, {"y", 2.0}};
  b.features = FeatureVector{{"x", 1.0}, {"y", 0.0}};
  list.hypotheses = {a, b};
  // w = (x:1, y:0), d = (y:1): a scores 0 + 2g, b scores 1 + 0g.
  const auto env = mert_envelope(list, WeightVector{{"x", 1}, {"y", 0}}, WeightVector{{"x", 0}, {"y", 1}});
  REQUIRE(env.size() == 2);
  CHECK(env[0].winner == 1);
  CHECK(env[0].right == 0.5);
}

TEST_CASE("line search finds a perfect step") {
  Segment seg{0, {"s"}, {tokenize("a b c d e")}};
  Hypothesis good, bad;
  good.tokens = tokenize("a b c d e");
  good.features = FeatureVector{{"f", 1.0}, {"g", 1.0}};
  bad.tokens = tokenize("x y z");
  bad.features = FeatureVector{{"f", 1.0}, {"g", -1.0}};
  TuningProblem p({"f", "g"}, std::vector<Segment>{seg});
  p.add(NBestList{0, {bad, good}});
  const double w[] = {1.0, 0.0}, d[] = {0.0, 1.0};
  const auto r = mert_line_search(p, w, d);
  CHECK(r.gamma > 0.0);
  CHECK(r.bleu == 1.0);
}

TEST_CASE("line search keeps the weights when nothing changes") {
  Segment seg{0, {"s"}, {tokenize("a b c d e")}};
  Hypothesis h1, h2;
  h1.tokens = tokenize("a b c d");
  h1.features = FeatureVector{{"f", 1.0}};
  h2.tokens = tokenize("a b c d");
  h2.features = FeatureVector{{"f", 2.0}};
  TuningProblem p({"f"}, std::vector<Segment>{seg});
  p.add(NBestList{0, {h1, h2}});
  const double w[] = {0.3}, d[] = {1.0};
  const auto r = mert_line_search(p, w, d);
  CHECK(r.gamma == 0.0);
  CHECK(r.bleu == p.bleu(w));
}

TEST_CASE("line search matches a grid oracle and never loses BLEU") {
  std::mt19937_64 rng(424242);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = random_instance(rng, 5, 5, 3);
    const auto p = problem_of(inst);
    std::vector<double> w(inst.names.size()), d(inst.names.size());
    for (auto& v : w) v = n01(rng);
    for (auto& v : d) v = n01(rng);
    const auto r = mert_line_search(p, w, d, 10.0);
    CHECK(r.bleu >= p.bleu(w));
    std::vector<double> at(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) at[k] = w[k] + r.gamma * d[k];
    CHECK(std::abs(r.bleu - p.bleu(at)) <= 1e-12);
    CHECK(std::abs(r.bleu - oracle::bleu_at(inst.grid, at)) <= 1e-12);
    double grid_best = 0.0;
    for (int g = -5000; g <= 5000; ++g) {
      std::vector<double> x(w.size());
      for (std::size_t k = 0; k < w.size(); ++k) x[k] = w[k] + g * 1e-3 * d[k];
      grid_best = std::max(grid_best, oracle::bleu_at(inst.grid, x));
    }
    CHECK(r.bleu >= grid_best - 1e-6);
  }
}

TEST_CASE("mert_iterate") {
  std::mt19937_64 rng(77);
  SUBCASE("an optimal one-feature start is kept") {
    Segment seg{0, {"s"}, {tokenize("a b c d e")}};
    Hypothesis good, bad;
    good.tokens = tokenize("a b c d e");
    good.features = FeatureVector{{"f", 1.0}};
    bad.tokens = tokenize("q");
    bad.features = FeatureVector{{"f", 0.0}};
    TuningProblem p({"f"}, std::vector<Segment>{seg});
    p.add(NBestList{0, {bad, good}});
    const std::vector<double> w0{0.7};
    MertConfig config;
    config.random_directions = 0;
    const auto r = mert_iterate(p, w0, config);
    CHECK(r.weights == w0);
    CHECK(r.bleu == 1.0);
  }
  SUBCASE("restarts never hurt") {
    for (int trial = 0; trial < 10; ++trial) {
      const auto inst = random_instance(rng, 5, 6, 3);
      const auto p = problem_of(inst);
      const std::vector<double> w0(inst.names.size(), 0.0);
      MertConfig plain, restarted;
      plain.seed = restarted.seed = static_cast<std::uint64_t>(trial);
      restarted.random_restarts = 3;
      CHECK(mert_iterate(p, w0, restarted).bleu >= mert_iterate(p, w0, plain).bleu);
    }
  }
  SUBCASE("deterministic given the seed") {
    const auto inst = random_instance(rng, 5, 6, 3);
    const auto p = problem_of(inst);
    MertConfig config;
    config.seed = 5;
    config.random_restarts = 2;
    const std::vector<double> w0(inst.names.size(), 0.0);
    CHECK(mert_iterate(p, w0, config).weights == mert_iterate(p, w0, config).weights);
  }
}

TEST_CASE("two-feature MERT reaches the grid optimum") {
  // Every segment has a perfect hypothesis that wins exactly when b < 0 and
  // a > -4b, a partial one (the first five reference words) and two junk ones.
  std::mt19937_64 rng(8);
  std::vector<Segment> segments;
  std::vector<NBestList> lists;
  oracle::GridProblem grid;
  for (std::size_t s = 0; s < 6; ++s) {
    Segment seg{s, {"s"}, {oracle::random_sentence(rng, 8, 8, 6)}};
    NBestList list{s, {}};
    std::vector<oracle::Counts> stats;
    std::vector<std::vector<double>> rows;
    auto push = [&](Tokens t, double a, double b) {
      Hypothesis h;
      h.segment_id = s;
      h.tokens = std::move(t);
      h.features = FeatureVector{{"a", a}, {"b", b}};
      stats.push_back(oracle::count(h.tokens, seg.references));
      rows.push_back({a, b});
      list.hypotheses.push_back(h);
    };
    const auto& ref = seg.references[0];
    push(Tokens{"zz"}, 1.0, 2.0);
    push(ref, 1.0, 1.0);
    push(Tokens{"yy", "yy"}, 0.0, 0.0);
    push(Tokens(ref.begin(), ref.begin() + 5), 0.5, -1.0);
    segments.push_back(seg);
    lists.push_back(list);
    grid.stats.push_back(stats);
    grid.features.push_back(rows);
  }
  TuningProblem p({"a", "b"}, segments);
  for (const auto& l : lists) p.add(l);

  double best = 0.0;
  for (int i = -100; i <= 100; ++i)
    for (int j = -100; j <= 100; ++j) best = std::max(best, oracle::bleu_at(grid, {i / 100.0, j / 100.0}));
  REQUIRE(best == 1.0);
  MertConfig config;
  config.seed = 1;
  const auto r = mert_iterate(p, std::vector<double>{0.0, 0.0}, config);
  CHECK(r.bleu == doctest::Approx(best).epsilon(1e-12));
  CHECK(oracle::bleu_at(grid, r.weights) == r.bleu);
}

TEST_CASE("PRO pair sampling examples") {
  ProConfig config;
  Rng rng(1);
  const double flat[] = {40.0, 40.0, 40.0};
  CHECK(pro_sample_pairs(flat, config, rng).empty());

  const double wide[] = {60.0, 40.0};
  CHECK(pro_sample_pairs(wide, config, rng).empty());
  ProConfig uncapped = config;
  uncapped.max_score_gap.reset();
  const auto pairs = pro_sample_pairs(wide, uncapped, rng);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].better == 0);
  CHECK(pairs[0].worse == 1);

  const double near[] = {50.0, 55.0};
  const auto one = pro_sample_pairs(near, config, rng);
  REQUIRE(one.size() == 1);
  CHECK(one[0].better == 1);
  CHECK(one[0].worse == 0);
  CHECK(one[0].gap == 5.0);
}

TEST_CASE("PRO pair sampling invariants") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> score(0, 40);
  std::uniform_int_distribution<int> size(1, 300);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<double> g(static_cast<std::size_t>(size(gen)));
    for (auto& v : g) v = std::round(score(gen) * 10) / 10;
    ProConfig config;
    config.seed = static_cast<std::uint64_t>(trial);
    Rng rng(config.seed);
    const auto pairs = pro_sample_pairs(g, config, rng);
    CHECK(pairs.size() <= static_cast<std::size_t>(config.pairs_kept_per_segment));
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& p = pairs[k];
      CHECK(g[p.better] > g[p.worse]);
      CHECK(p.gap == g[p.better] - g[p.worse]);
      CHECK(p.gap > config.min_score_gap);
      CHECK(p.gap <= *config.max_score_gap);
      CHECK(seen.insert({std::min(p.better, p.worse), std::max(p.better, p.worse)}).second);
      if (k > 0) CHECK(pairs[k - 1].gap >= p.gap);
    }
    Rng again(config.seed);
    const auto repeat = pro_sample_pairs(g, config, again);
    REQUIRE(repeat.size() == pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) CHECK(repeat[k].better == pairs[k].better);
  }
}

TEST_CASE("pairwise classifier") {
  ProConfig config;
  SUBCASE("separable by one feature") {
    std::mt19937_64 gen(4);
    std::normal_distribution<double> n01;
    std::vector<PairExample> ex;
    for (int i = 0; i < 100; ++i) ex.push_back({{std::abs(n01(gen)) + 0.1, n01(gen)}, 1});
    const auto w = train_pairwise_classifier(ex, 2, config);
    REQUIRE(w);
    CHECK((*w)[0] > 0.0);
  }
  SUBCASE("two-candidate instances") {
    // better - worse = (+a, b) for every sign and scale of b.
    for (double a : {0.5, 1.0, 3.0})
      for (double b : {-2.0, 0.0, 2.0}) {
        const PairExample ex[] = {{{a, b}, 1}};
        const auto w = train_pairwise_classifier(ex, 2, config);
        REQUIRE(w);
        CHECK((*w)[0] > 0.0);
      }
  }
  SUBCASE("empty training set") {
    CHECK_FALSE(train_pairwise_classifier(std::vector<PairExample>{}, 3, config));
  }
  SUBCASE("flipped labels negate the weights") {
    std::mt19937_64 gen(6);
    std::normal_distribution<double> n01;
    std::vector<PairExample> ex, flipped;
    for (int i = 0; i < 50; ++i) {
      PairExample e{{n01(gen), n01(gen), n01(gen)}, i % 3 == 0 ? -1 : 1};
      ex.push_back(e);
      e.label = -e.label;
      flipped.push_back(e);
    }
    const auto w = train_pairwise_classifier(ex, 3, config);
    const auto v = train_pairwise_classifier(flipped, 3, config);
    REQUIRE(w);
    REQUIRE(v);
    for (std::size_t k = 0; k < 3; ++k) CHECK((*v)[k] == -(*w)[k]);
  }
}

TEST_CASE("PRO iteration without pairs leaves the weights alone") {
  Segment seg{0, {"s"}, {tokenize("a b c")}};
  Hypothesis h1, h2;
  h1.tokens = tokenize("a b c");
  h1.features = FeatureVector{{"f", 1.0}};
  h2.tokens = tokenize("a b c");
  h2.features = FeatureVector{{"f", 2.0}};
  TuningProblem p({"f"}, std::vector<Segment>{seg});
  p.add(NBestList{0, {h1, h2}});
  ProConfig config;
  Rng rng(0);
  const std::vector<double> w{0.25};
  const auto step = pro_iterate(p, w, config, rng);
  CHECK(step.pairs == 0);
  CHECK(step.weights == w);
}

TEST_CASE("PRO config validation") {
  ProConfig c;
  c.min_score_gap = 20.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = ProConfig{};
  c.pairs_kept_per_segment = c.pairs_sampled_per_segment + 1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = ProConfig{};
  c.interpolation = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
}
