#include "lengthtune/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>

namespace lengthtune {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  static constexpr std::string_view kSep = "|||";
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(kSep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, pos - start)));
    start = pos + kSep.size();
  }
  return fields;
}

bool parse_number(std::string_view text, double& value) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool parse_index(std::string_view text, std::size_t& value) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

Tokens tokenize(std::string_view line) {
  Tokens out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

double dot(const WeightVector& weights, const FeatureVector& features) {
  if (!weights.same_names(features))
    throw FeatureMismatch("weight and feature name sets differ");
  double sum = 0.0;
  auto f = features.begin();
  for (auto w = weights.begin(); w != weights.end(); ++w, ++f) sum += w->second * f->second;
  return sum;
}

double max_abs_difference(const WeightVector& a, const WeightVector& b) {
  if (!a.same_names(b)) throw FeatureMismatch("weight vectors have different features");
  double out = 0.0;
  auto y = b.begin();
  for (auto x = a.begin(); x != a.end(); ++x, ++y) out = std::max(out, std::abs(x->second - y->second));
  return out;
}

std::size_t NBestList::merge(const NBestList& other) {
  std::size_t added = 0;
  for (const auto& hyp : other.hypotheses) {
    if (std::find(hypotheses.begin(), hypotheses.end(), hyp) != hypotheses.end()) continue;
    hypotheses.push_back(hyp);
    ++added;
  }
  return added;
}

void validate_segments(const std::vector<Segment>& segments) {
  if (segments.empty()) return;
  const std::size_t n_refs = segments.front().references.size();
  for (const auto& seg : segments) {
    if (seg.source.empty())
      throw Error("segment " + std::to_string(seg.id) + " has an empty source");
    if (seg.references.empty())
      throw Error("segment " + std::to_string(seg.id) + " has no references");
    if (seg.references.size() != n_refs)
      throw Error("segment " + std::to_string(seg.id) + " has " +
                  std::to_string(seg.references.size()) + " references, expected " +
                  std::to_string(n_refs));
    for (const auto& ref : seg.references)
      if (ref.empty()) throw Error("segment " + std::to_string(seg.id) + " has an empty reference");
  }
}

std::vector<NBestList> parse_nbest(std::istream& in) {
  std::map<std::size_t, NBestList> by_segment;
  std::vector<std::string> feature_names;
  bool have_names = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() < 3 || fields.size() > 4)
      throw ParseError("expected `SEGID ||| tokens ||| features [||| total]`", line_no);

    Hypothesis hyp;
    if (!parse_index(fields[0], hyp.segment_id))
      throw ParseError("bad segment id '" + std::string(fields[0]) + "'", line_no);
    hyp.tokens = tokenize(fields[1]);

    for (std::string_view item : tokenize(fields[2])) {
      auto eq = item.find('=');
      if (eq == std::string_view::npos || eq == 0)
        throw ParseError("bad feature '" + std::string(item) + "'", line_no);
      std::string_view name = item.substr(0, eq);
      double value = 0.0;
      if (!parse_number(item.substr(eq + 1), value))
        throw ParseError("bad value for feature '" + std::string(name) + "'", line_no);
      if (!std::isfinite(value))
        throw ParseError("non-finite value for feature '" + std::string(name) + "'", line_no);
      if (hyp.features.contains(name))
        throw ParseError("duplicate feature '" + std::string(name) + "'", line_no);
      hyp.features.set(name, value);
    }
    if (hyp.features.empty()) throw ParseError("hypothesis has no features", line_no);

    auto names = hyp.features.names();
    if (!have_names) {
      feature_names = std::move(names);
      have_names = true;
    } else if (names != feature_names) {
      throw ParseError("feature names differ from earlier hypotheses", line_no);
    }

    auto& list = by_segment[hyp.segment_id];
    list.segment_id = hyp.segment_id;
    if (std::find(list.hypotheses.begin(), list.hypotheses.end(), hyp) == list.hypotheses.end())
      list.hypotheses.push_back(std::move(hyp));
  }

  std::vector<NBestList> out;
  out.reserve(by_segment.size());
  for (auto& kv : by_segment) out.push_back(std::move(kv.second));
  return out;
}

std::string format_double(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_nbest(std::ostream& out, const std::vector<NBestList>& lists) {
  for (const auto& list : lists) {
    for (const auto& hyp : list.hypotheses) {
      out << hyp.segment_id << " ||| " << join(hyp.tokens) << " |||";
      for (const auto& [name, value] : hyp.features) out << ' ' << name << '=' << format_double(value);
      out << '\n';
    }
  }
}

std::vector<Tokens> parse_plain(std::istream& in) {
  std::vector<Tokens> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(tokenize(line));
  return out;
}

std::vector<std::vector<Tokens>> parse_references(const std::vector<std::istream*>& streams) {
  if (streams.empty()) throw Error("at least one reference stream is required");
  std::vector<std::vector<Tokens>> per_stream;
  per_stream.reserve(streams.size());
  for (std::size_t j = 0; j < streams.size(); ++j) {
    std::vector<Tokens> lines;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(*streams[j], line)) {
      ++line_no;
      Tokens tokens = tokenize(line);
      if (tokens.empty())
        throw ParseError("empty reference in stream " + std::to_string(j), line_no);
      lines.push_back(std::move(tokens));
    }
    per_stream.push_back(std::move(lines));
  }
  const std::size_t n = per_stream.front().size();
  for (std::size_t j = 1; j < per_stream.size(); ++j)
    if (per_stream[j].size() != n)
      throw Error("reference stream " + std::to_string(j) + " has " +
                  std::to_string(per_stream[j].size()) + " lines, stream 0 has " +
                  std::to_string(n));

  std::vector<std::vector<Tokens>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].reserve(per_stream.size());
    for (auto& stream : per_stream) out[i].push_back(std::move(stream[i]));
  }
  return out;
}

std::vector<Segment> read_segments(std::istream& source,
                                   const std::vector<std::istream*>& references) {
  auto sources = parse_plain(source);
  auto refs = parse_references(references);
  if (sources.size() != refs.size())
    throw Error("source has " + std::to_string(sources.size()) + " lines, references have " +
                std::to_string(refs.size()));
  std::vector<Segment> out(sources.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].id = i;
    out[i].source = std::move(sources[i]);
    out[i].references = std::move(refs[i]);
  }
  validate_segments(out);
  return out;
}

WeightVector parse_weights(std::istream& in) {
  WeightVector out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    Tokens parts = tokenize(view);
    double value = 0.0;
    if (parts.size() != 2 || !parse_number(parts[1], value))
      throw ParseError("expected `name value`", line_no);
    if (!std::isfinite(value)) throw ParseError("non-finite weight", line_no);
    if (out.contains(parts[0])) throw ParseError("duplicate weight '" + parts[0] + "'", line_no);
    out.set(parts[0], value);
  }
  return out;
}

void write_weights(std::ostream& out, const WeightVector& weights) {
  for (const auto& [name, value] : weights) out << name << ' ' << format_double(value) << '\n';
}

std::size_t rerank_index(const NBestList& nbest, const WeightVector& weights) {
  if (nbest.hypotheses.empty()) throw Error("empty n-best list");
  std::size_t best = 0;
  double best_score = dot(weights, nbest.hypotheses[0].features);
  for (std::size_t i = 1; i < nbest.hypotheses.size(); ++i) {
    double s = dot(weights, nbest.hypotheses[i].features);
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return best;
}

const Hypothesis& rerank(const NBestList& nbest, const WeightVector& weights) {
  return nbest.hypotheses[rerank_index(nbest, weights)];
}

}  // namespace lengthtune
