#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lengthtune/metrics.hpp"
#include "oracles.hpp"

using namespace lengthtune;

namespace {

Tokens toks(const char* s) { return tokenize(s); }

BleuStats stats_of(const char* hyp, std::initializer_list<const char*> refs) {
  std::vector<Tokens> r;
  for (auto* ref : refs) r.push_back(toks(ref));
  return compute_stats(toks(hyp), r);
}

}  // namespace

TEST_CASE("clipped matches") {
  const std::vector<Tokens> cat{toks("the cat")};
  CHECK(clipped_matches(toks("the the the the"), cat, 1) == 1);
  const std::vector<Tokens> mat{toks("the cat sat on a mat")};
  CHECK(clipped_matches(toks("the cat sat on the mat"), mat, 2) == 3);
  const auto same = toks("a b c d e");
  const std::vector<Tokens> self{same};
  for (int n = 1; n <= 4; ++n) CHECK(clipped_matches(same, self, n) == 6 - n);
  CHECK(clipped_matches(Tokens{}, cat, 1) == 0);
}

TEST_CASE("clipping takes the maximum count over references") {
  const std::vector<Tokens> refs{toks("a b"), toks("a a c")};
  CHECK(clipped_matches(toks("a a a"), refs, 1) == 2);
}

TEST_CASE("effective reference length") {
  const std::int64_t a[] = {8, 11, 13};
  CHECK(effective_ref_length(10, a) == 11);
  const std::int64_t b[] = {9, 11};
  CHECK(effective_ref_length(10, b) == 9);
  CHECK(effective_ref_length(10, b, RefLengthTie::Longer) == 11);
  const std::int64_t c[] = {37};
  CHECK(effective_ref_length(3, c) == 37);
}

TEST_CASE("brevity penalty") {
  CHECK(brevity_penalty(12, 10) == 1.0);
  CHECK(brevity_penalty(9, 10) == doctest::Approx(0.894839).epsilon(1e-6));
  CHECK(brevity_penalty(0, 5) == 0.0);
  CHECK(brevity_penalty(10, 10) == 1.0);
}

TEST_CASE("worked example") {
  const auto s = stats_of("the cat sat on the mat", {"the cat sat on a mat"});
  CHECK(s.match == std::array<std::int64_t, 4>{5, 3, 2, 1});
  CHECK(s.total == std::array<std::int64_t, 4>{6, 5, 4, 3});
  CHECK(std::abs(corpus_bleu(s) - 0.537285) < 1e-6);
  CHECK(std::abs(sentence_bleu(s, Smoothing::PlusOne) - 0.638943) < 1e-6);
  // c == r, so the brevity fixes change nothing; grounding lifts p1 to 6/7.
  CHECK(sentence_bleu(s, Smoothing::PlusOneBp) == sentence_bleu(s, Smoothing::PlusOne));
  const double grounded = std::pow(6.0 / 7 * 4.0 / 6 * 3.0 / 5 * 2.0 / 4, 0.25);
  CHECK(sentence_bleu(s, Smoothing::PlusOneBpGrounded) == doctest::Approx(grounded).epsilon(1e-14));
}

TEST_CASE("corpus BLEU edge cases") {
  const auto same = stats_of("a b c d e", {"a b c d e"});
  CHECK(corpus_bleu(same) == 1.0);
  CHECK(corpus_bleu(stats_of("a b c d", {"a b c x"})) == 0.0);  // no 4-gram match
  CHECK(corpus_bleu(BleuStats{}) == 0.0);
}

TEST_CASE("smoothed sentence variants on short hypotheses") {
  // c = 3, r = 4: everything matches, only the brevity penalty differs.
  const auto s = stats_of("a b c", {"a b c d"});
  CHECK(sentence_bleu(s, Smoothing::PlusOne) == doctest::Approx(std::exp(1.0 - 4.0 / 3.0)).epsilon(1e-14));
  CHECK(sentence_bleu(s, Smoothing::PlusOneBp) == 1.0);
  CHECK(sentence_bleu(s, Smoothing::PlusOneBpGrounded) == 1.0);

  // c = 2, r = 3, one unigram match.
  const auto t = stats_of("a x", {"a b c"});
  CHECK(sentence_bleu(t, Smoothing::PlusOne) ==
        doctest::Approx(std::pow(0.5 * 0.5, 0.25) * std::exp(1.0 - 1.5)).epsilon(1e-14));
  CHECK(sentence_bleu(t, Smoothing::PlusOneBp) == doctest::Approx(std::pow(0.25, 0.25)).epsilon(1e-14));
  CHECK(sentence_bleu(t, Smoothing::PlusOneBpGrounded) ==
        doctest::Approx(std::pow(2.0 / 3.0 * 0.5, 0.25)).epsilon(1e-14));
}

TEST_CASE("add-one smoothing of an exact match gives one") {
  const auto s = stats_of("x y z w v", {"x y z w v"});
  CHECK(sentence_bleu(s, Smoothing::PlusOne) == 1.0);
}

TEST_CASE("empty hypothesis scores zero under every scheme") {
  const auto s = stats_of("", {"a b"});
  for (auto scheme : {Smoothing::PlusOne, Smoothing::PlusOneBp, Smoothing::PlusOneBpGrounded})
    CHECK(sentence_bleu(s, scheme) == 0.0);
}

TEST_CASE("zero-match hypotheses") {
  const std::vector<Tokens> ref{toks("r0 r1 r2 r3 r4 r5 r6 r7 r8 r9")};
  auto junk = [](int len) {
    Tokens t;
    for (int i = 0; i < len; ++i) t.push_back("j" + std::to_string(i));
    return t;
  };
  // Without unigram smoothing, a zero unigram precision zeroes the score.
  CHECK(sentence_bleu(junk(3), ref, Smoothing::PlusOne) == 0.0);
  CHECK(sentence_bleu(junk(30), ref, Smoothing::PlusOne) == 0.0);
  // With it, the score strictly decreases with length past the reference.
  CHECK(sentence_bleu(junk(3), ref, Smoothing::PlusOneBpGrounded) >
        sentence_bleu(junk(30), ref, Smoothing::PlusOneBpGrounded));
  double prev = 2.0;
  for (int len = 10; len <= 40; ++len) {
    const double v = sentence_bleu(junk(len), ref, Smoothing::PlusOneBpGrounded);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("smoothing names round trip") {
  for (auto s : {Smoothing::None, Smoothing::PlusOne, Smoothing::PlusOneBp, Smoothing::PlusOneBpGrounded})
    CHECK(parse_smoothing(smoothing_name(s)) == s);
  CHECK_THROWS_AS(parse_smoothing("plus2"), Error);
}

TEST_CASE("statistics match a brute-force oracle") {
  std::mt19937_64 rng(20240611);
  BleuStats sum;
  oracle::Counts osum;
  for (int i = 0; i < 300; ++i) {
    const auto c = oracle::random_case(rng);
    const auto s = compute_stats(c.hyp, c.refs);
    const auto k = oracle::count(c.hyp, c.refs);
    for (int n = 0; n < 4; ++n) {
      REQUIRE(s.match[n] == k.match[n]);
      REQUIRE(s.total[n] == k.total[n]);
      CHECK(s.total[n] == std::max<std::int64_t>(0, s.hyp_len - n));
      CHECK(s.match[n] <= s.total[n]);
    }
    REQUIRE(s.ref_len == k.r);
    CHECK(std::abs(sentence_bleu(s, Smoothing::PlusOne) - oracle::bleu_plus_one(k)) <= 1e-12);
    const ReferenceSet set(c.refs);
    CHECK(set.stats(c.hyp) == s);
    sum += s;
    osum = oracle::add(osum, k);
  }
  CHECK(std::abs(corpus_bleu(sum) - oracle::corpus_bleu(osum)) <= 1e-12);
}

TEST_CASE("corpus BLEU depends only on the summed statistics") {
  std::mt19937_64 rng(5);
  std::vector<BleuStats> parts;
  for (int i = 0; i < 40; ++i) {
    const auto c = oracle::random_case(rng);
    parts.push_back(compute_stats(c.hyp, c.refs));
  }
  BleuStats forward, backward;
  for (const auto& p : parts) forward += p;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) backward += *it;
  CHECK(forward == backward);
  CHECK(corpus_bleu(forward) == corpus_bleu(backward));
  CHECK((forward - parts.front()) + parts.front() == forward);
}

TEST_CASE("effective reference length is never farther than any reference") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(1, 30), count(1, 4);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::int64_t> refs(static_cast<std::size_t>(count(rng)));
    for (auto& r : refs) r = len(rng);
    const std::int64_t c = len(rng) - 1;
    const auto r = effective_ref_length(c, refs);
    for (auto rj : refs) CHECK(std::llabs(c - r) <= std::llabs(c - rj));
  }
}
