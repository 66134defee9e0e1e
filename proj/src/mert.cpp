#include "lengthtune/mert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lengthtune/random.hpp"

namespace lengthtune {

std::vector<EnvelopePiece> upper_envelope(std::span<const Line> lines) {
  if (lines.empty()) throw Error("upper_envelope needs at least one line");
  std::vector<std::size_t> order(lines.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (lines[a].slope != lines[b].slope) return lines[a].slope < lines[b].slope;
    if (lines[a].intercept != lines[b].intercept) return lines[a].intercept > lines[b].intercept;
    return a < b;
  });

  struct Entry {
    std::size_t line;
    double start;
  };
  std::vector<Entry> hull;
  double previous_slope = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    // Parallel lines: the first one in sort order dominates.
    if (k > 0 && lines[i].slope == previous_slope) continue;
    previous_slope = lines[i].slope;

    double start = -std::numeric_limits<double>::infinity();
    while (!hull.empty()) {
      const Line& top = lines[hull.back().line];
      const double x = (top.intercept - lines[i].intercept) / (lines[i].slope - top.slope);
      if (x <= hull.back().start) {
        hull.pop_back();
      } else {
        start = x;
        break;
      }
    }
    hull.push_back({i, start});
  }

  std::vector<EnvelopePiece> pieces(hull.size());
  for (std::size_t k = 0; k < hull.size(); ++k) {
    pieces[k].left = hull[k].start;
    pieces[k].winner = hull[k].line;
    if (k + 1 < hull.size()) pieces[k].right = hull[k + 1].start;
  }
  return pieces;
}

std::vector<EnvelopePiece> mert_envelope(const NBestList& nbest, const WeightVector& w,
                                         const WeightVector& direction) {
  std::vector<Line> lines;
  lines.reserve(nbest.hypotheses.size());
  for (const auto& hyp : nbest.hypotheses)
    lines.push_back({dot(direction, hyp.features), dot(w, hyp.features)});
  return upper_envelope(lines);
}

namespace {

struct Event {
  double x;
  std::size_t segment;
  std::size_t from;
  std::size_t to;
};

double pick_gamma(double left, double right, double window) {
  const bool open_left = std::isinf(left), open_right = std::isinf(right);
  if (open_left && open_right) return 0.0;
  if (open_left) return right - window;
  if (open_right) return left + window;
  return 0.5 * (left + right);
}

}  // namespace

LineSearchResult mert_line_search(const TuningProblem& problem, std::span<const double> w,
                                  std::span<const double> direction, double gamma_window) {
  if (!(gamma_window > 0.0)) throw Error("gamma_window must be positive");
  BleuStats current;
  std::vector<Event> events;
  std::vector<Line> lines;
  for (std::size_t s = 0; s < problem.num_segments(); ++s) {
    const auto& seg = problem.segment(s);
    if (seg.size() == 0) continue;
    lines.clear();
    for (std::size_t h = 0; h < seg.size(); ++h)
      lines.push_back({dot(direction, problem.row(s, h)), dot(w, problem.row(s, h))});
    auto env = upper_envelope(lines);
    current += seg.stats[env.front().winner];
    for (std::size_t k = 1; k < env.size(); ++k)
      events.push_back({env[k].left, s, env[k - 1].winner, env[k].winner});
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.x < b.x; });

  const double bleu_here = problem.bleu(w);
  double best_bleu = -1.0;
  double best_left = 0.0, best_right = 0.0;
  double left = -std::numeric_limits<double>::infinity();
  std::size_t e = 0;
  while (true) {
    const double right = e < events.size() ? events[e].x : std::numeric_limits<double>::infinity();
    const double b = corpus_bleu(current);
    if (b > best_bleu) {
      best_bleu = b;
      best_left = left;
      best_right = right;
    }
    if (e >= events.size()) break;
    const double x = events[e].x;
    for (; e < events.size() && events[e].x == x; ++e) {
      const auto& seg = problem.segment(events[e].segment);
      current -= seg.stats[events[e].from];
      current += seg.stats[events[e].to];
    }
    left = x;
  }

  if (!(best_bleu > bleu_here)) return {0.0, bleu_here};
  const double gamma = pick_gamma(best_left, best_right, gamma_window);
  std::vector<double> moved(w.begin(), w.end());
  for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += gamma * direction[i];
  const double achieved = problem.bleu(moved);
  if (!(achieved > bleu_here)) return {0.0, bleu_here};
  return {gamma, achieved};
}

MertResult mert_iterate(const TuningProblem& problem, std::span<const double> w0, const MertConfig& config) {
  if (config.random_restarts < 0) throw Error("random_restarts must be >= 0");
  if (!(config.gamma_window > 0.0)) throw Error("gamma_window must be positive");
  const std::size_t dim = problem.dim();
  if (w0.size() != dim) throw FeatureMismatch("initial weights do not match the tuning problem");

  Rng rng(config.seed);
  MertResult best;
  for (int start = 0; start <= config.random_restarts; ++start) {
    std::vector<double> w(w0.begin(), w0.end());
    if (start > 0)
      for (auto& x : w) x = uniform(rng, -1.0, 1.0);
    double current = problem.bleu(w);
    int passes = 0;
    for (; passes < config.max_passes; ++passes) {
      std::vector<std::vector<double>> directions;
      for (std::size_t i = 0; i < dim; ++i) {
        std::vector<double> d(dim, 0.0);
        d[i] = 1.0;
        directions.push_back(std::move(d));
      }
      for (int r = 0; r < config.random_directions; ++r) {
        std::vector<double> d(dim);
        double norm = 0.0;
        for (auto& x : d) {
          x = standard_normal(rng);
          norm += x * x;
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        for (auto& x : d) x /= norm;
        directions.push_back(std::move(d));
      }

      bool improved = false;
      for (const auto& d : directions) {
        auto step = mert_line_search(problem, w, d, config.gamma_window);
        if (step.bleu > current + config.min_improvement) {
          for (std::size_t i = 0; i < dim; ++i) w[i] += step.gamma * d[i];
          current = step.bleu;
          improved = true;
        }
      }
      if (!improved) break;
    }
    if (start == 0 || current > best.bleu) {
      best.weights = std::move(w);
      best.bleu = current;
      best.passes = passes;
    }
  }
  return best;
}

WeightVector mert_iterate(const TuningProblem& problem, const WeightVector& w0, const MertConfig& config) {
  auto dense = problem.dense(w0);
  return problem.named(mert_iterate(problem, dense, config).weights);
}

}  // namespace lengthtune
