// lengthtune: score, tune, select, stats, synth and experiment subcommands.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lengthtune/harness.hpp"
#include "lengthtune/keyvalue.hpp"
#include "lengthtune/metrics.hpp"
#include "lengthtune/report.hpp"
#include "lengthtune/selection.hpp"
#include "lengthtune/synth.hpp"
#include "lengthtune/tuning.hpp"

namespace fs = std::filesystem;
using namespace lengthtune;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::vector<std::string> read_lines(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  auto out = open_out(path);
  for (const auto& line : lines) out << line << '\n';
}

// Reference files of a prefix: PREFIX.ref0, PREFIX.ref1, ... while they exist.
std::vector<fs::path> prefix_references(const std::string& prefix) {
  std::vector<fs::path> out;
  for (int k = 0;; ++k) {
    fs::path p = prefix + ".ref" + std::to_string(k);
    if (!fs::exists(p)) break;
    out.push_back(p);
  }
  if (out.empty()) throw Error("no reference files " + prefix + ".ref0 ...");
  return out;
}

std::vector<Segment> load_segments(const fs::path& src, const std::vector<fs::path>& refs) {
  auto src_in = open_in(src);
  std::vector<std::ifstream> files;
  for (const auto& r : refs) files.push_back(open_in(r));
  std::vector<std::istream*> streams;
  for (auto& f : files) streams.push_back(&f);
  return read_segments(src_in, streams);
}

std::vector<std::vector<Tokens>> load_references(const std::vector<fs::path>& refs) {
  std::vector<std::ifstream> files;
  for (const auto& r : refs) files.push_back(open_in(r));
  std::vector<std::istream*> streams;
  for (auto& f : files) streams.push_back(&f);
  return parse_references(streams);
}

std::vector<NBestList> load_nbest(const fs::path& path) {
  auto in = open_in(path);
  return parse_nbest(in);
}

std::optional<double> parse_gap(const std::string& text) {
  if (text == "off" || text == "none") return std::nullopt;
  KeyValues kv;
  kv.set("pro-max-gap", text);
  return kv.get_double("pro-max-gap", 0.0);
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
  std::string nbest_top1, plain;
  std::vector<std::string> refs;
  std::string scheme;
};

int cmd_score(const ScoreArgs& a) {
  std::vector<fs::path> ref_paths(a.refs.begin(), a.refs.end());
  const auto refs = load_references(ref_paths);

  std::vector<Tokens> hyps;
  if (!a.plain.empty()) {
    auto in = open_in(a.plain);
    hyps = parse_plain(in);
  } else {
    const auto lists = load_nbest(a.nbest_top1);
    hyps.assign(refs.size(), Tokens{});
    std::vector<bool> seen(refs.size(), false);
    for (const auto& list : lists) {
      if (list.segment_id >= refs.size())
        throw Error("n-best segment " + std::to_string(list.segment_id) + " has no reference");
      if (list.hypotheses.empty()) continue;
      hyps[list.segment_id] = list.hypotheses.front().tokens;
      seen[list.segment_id] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (!seen[i]) throw Error("no n-best entry for segment " + std::to_string(i));
  }
  if (hyps.size() != refs.size())
    throw Error("hypotheses have " + std::to_string(hyps.size()) + " lines, references " +
                std::to_string(refs.size()));

  BleuStats total;
  std::vector<BleuStats> per_segment;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    per_segment.push_back(compute_stats(hyps[i], refs[i]));
    total += per_segment.back();
  }

  auto row = [](const std::string& scope, const std::string& segment, double score, const BleuStats& s) {
    const auto p = precisions(s);
    const double ratio = s.ref_len > 0 ? static_cast<double>(s.hyp_len) / static_cast<double>(s.ref_len) : 0.0;
    std::cout << scope << ',' << segment << ',' << format_double(score) << ','
              << format_double(brevity_penalty(s.hyp_len, s.ref_len)) << ',' << format_double(ratio) << ','
              << s.hyp_len << ',' << s.ref_len;
    for (double v : p) std::cout << ',' << format_double(v);
    std::cout << '\n';
  };
  std::cout << "scope,segment,bleu,bp,ratio,hyp_len,ref_len,p1,p2,p3,p4\n";
  row("corpus", "", corpus_bleu(total), total);
  if (!a.scheme.empty()) {
    const auto scheme = parse_smoothing(a.scheme);
    if (scheme == Smoothing::None) throw Error("--sentence-scheme needs a smoothed scheme");
    const std::string scope{smoothing_name(scheme)};
    for (std::size_t i = 0; i < per_segment.size(); ++i)
      row(scope, std::to_string(i), sentence_bleu(per_segment[i], scheme), per_segment[i]);
  }
  return 0;
}

// ---------------------------------------------------------------- tune

struct TuneArgs {
  std::string task, src, nbest;
  std::vector<std::string> refs;
  std::string subset = "full";
  double fraction = 0.5;
  std::string optimizer = "pro", metric = "plus1";
  int iterations = 25, reruns = 3, mert_restarts = 0;
  std::size_t nbest_size = 1000;
  std::uint64_t seed = 1;
  std::string pro_max_gap = "10";
  std::string out_dir;
};

std::string evaluation_fields(const Evaluation& e) {
  return format_double(e.bleu) + ',' + format_double(e.bp) + ',' + format_double(e.hvb) + ',' + format_double(e.lr);
}

int cmd_tune(const TuneArgs& a) {
  std::optional<StaticNBestSource> tuning, test;
  if (!a.task.empty()) {
    const auto task = read_task(a.task);
    const auto cond = parse_tune_condition(a.subset);
    std::vector<std::size_t> idx;
    const auto& segs = task.tuning.segments;
    switch (cond) {
      case TuneCondition::Shortest:
        idx = select_indices_by_length(segs, {LengthCondition::Shortest, a.fraction});
        break;
      case TuneCondition::Middle:
        idx = select_indices_by_length(segs, {LengthCondition::Middle, a.fraction});
        break;
      case TuneCondition::Longest:
        idx = select_indices_by_length(segs, {LengthCondition::Longest, a.fraction});
        break;
      case TuneCondition::Random:
        idx = select_indices_random(segs.size(), a.fraction, a.seed);
        break;
      case TuneCondition::Full:
        for (std::size_t i = 0; i < segs.size(); ++i) idx.push_back(i);
        break;
    }
    tuning.emplace(task.tuning.source(idx));
    test.emplace(task.test.source());
  } else {
    if (a.src.empty() || a.refs.empty() || a.nbest.empty())
      throw Error("tune needs --task DIR or all of --src, --refs and --nbest");
    std::vector<fs::path> ref_paths(a.refs.begin(), a.refs.end());
    tuning.emplace(load_segments(a.src, ref_paths), load_nbest(a.nbest));
  }

  TuningConfig config;
  config.optimizer = parse_optimizer(a.optimizer);
  config.pro.metric = parse_smoothing(a.metric);
  config.pro.max_score_gap = parse_gap(a.pro_max_gap);
  config.max_iterations = a.iterations;
  config.nbest_size = a.nbest_size;
  config.reruns = a.reruns;
  config.seed = a.seed;
  config.mert.random_restarts = a.mert_restarts;
  if (config.reruns < 1) throw Error("--reruns must be >= 1");

  const auto result = run_tuning(*tuning, config, test ? &*test : nullptr);

  const fs::path out = a.out_dir;
  fs::create_directories(out);
  const auto names = tuning->feature_names();
  for (const auto& r : result.reruns) {
    auto w = open_out(out / ("weights.rerun" + std::to_string(r.rerun) + ".txt"));
    write_weights(w, r.weights);
    auto t = open_out(out / ("trace.rerun" + std::to_string(r.rerun) + ".csv"));
    t << "# lengthtune trace v1\niteration,candidates,pairs,bleu,bp,hvb,lr";
    for (const auto& n : names) t << ",w_" << n;
    t << '\n';
    for (const auto& it : r.trace) {
      t << it.iteration << ',' << it.candidates << ',' << it.pairs << ',' << evaluation_fields(it.tuning);
      for (const auto& n : names) t << ',' << format_double(it.weights.at(n));
      t << '\n';
    }
  }
  auto s = open_out(out / "summary.csv");
  s << "# lengthtune tune summary v1\n"
    << "rerun,seed,iterations,converged,tune_bleu,tune_bp,tune_hvb,tune_lr,test_bleu,test_bp,test_hvb,test_lr\n";
  for (const auto& r : result.reruns) {
    s << r.rerun << ',' << r.seed << ',' << r.trace.size() << ',' << (r.converged ? 1 : 0) << ','
      << evaluation_fields(r.trace.empty() ? Evaluation{} : r.trace.back().tuning) << ','
      << (r.has_test ? evaluation_fields(r.test) : std::string(",,,")) << '\n';
  }
  if (test) s << "mean,,,,,,,," << evaluation_fields(result.mean_test) << '\n';
  return 0;
}

// ---------------------------------------------------------------- select

struct SelectArgs {
  std::string condition = "longest";
  double fraction = 0.5;
  std::uint64_t seed = 1;
  std::string in, out;
};

int cmd_select(const SelectArgs& a) {
  const auto refs = prefix_references(a.in);
  const auto segments = load_segments(a.in + ".src", refs);
  std::vector<std::size_t> idx;
  if (a.condition == "random")
    idx = select_indices_random(segments.size(), a.fraction, a.seed);
  else
    idx = select_indices_by_length(segments, {parse_condition(a.condition), a.fraction});

  const fs::path out_prefix = a.out;
  if (out_prefix.has_parent_path()) fs::create_directories(out_prefix.parent_path());
  auto subset = [&](const fs::path& from, const std::string& suffix) {
    const auto lines = read_lines(from);
    if (lines.size() != segments.size()) throw Error(from.string() + ": line count differs from the source");
    std::vector<std::string> kept;
    for (auto i : idx) kept.push_back(lines[i]);
    write_lines(a.out + suffix, kept);
  };
  subset(a.in + ".src", ".src");
  for (std::size_t k = 0; k < refs.size(); ++k) subset(refs[k], ".ref" + std::to_string(k));
  if (fs::exists(a.in + ".genre")) subset(a.in + ".genre", ".genre");

  // N-best ids are renumbered to the output line numbers.
  if (fs::exists(a.in + ".nbest")) {
    const auto lists = load_nbest(a.in + ".nbest");
    if (lists.size() != segments.size()) throw Error(a.in + ".nbest: segment count differs from the source");
    std::vector<NBestList> kept;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      NBestList list = lists[idx[j]];
      list.segment_id = j;
      for (auto& h : list.hypotheses) h.segment_id = j;
      kept.push_back(std::move(list));
    }
    auto out = open_out(a.out + ".nbest");
    write_nbest(out, kept);
  }
  std::vector<std::string> ids;
  for (auto i : idx) ids.push_back(std::to_string(i));
  write_lines(a.out + ".ids", ids);
  return 0;
}

// ---------------------------------------------------------------- stats

struct StatsArgs {
  std::string in, hyp, genre_vs;
  std::string convention = "mean";
};

int cmd_stats(const StatsArgs& a) {
  const auto segments = load_segments(a.in + ".src", prefix_references(a.in));
  VerbosityConvention conv;
  if (a.convention == "mean")
    conv = VerbosityConvention::MeanReference;
  else if (a.convention == "first")
    conv = VerbosityConvention::FirstReference;
  else
    throw Error("unknown verbosity convention '" + a.convention + "'");
  const auto s = dataset_stats(segments, conv);

  std::cout << "n_segments,n_source_tokens,n_reference_tokens,mean_source_length,verbosity";
  if (!a.hyp.empty()) std::cout << ",hyp_tokens,hvb,lr,bp";
  if (!a.genre_vs.empty()) std::cout << ",genre_kl";
  std::cout << '\n'
            << s.n_segments << ',' << s.n_source_tokens << ',' << format_double(s.n_reference_tokens) << ','
            << format_double(s.mean_source_length) << ',' << format_double(s.verbosity);
  if (!a.hyp.empty()) {
    auto in = open_in(a.hyp);
    const auto hyps = parse_plain(in);
    const auto d = hypothesis_diagnostics(segments, hyps);
    std::cout << ',' << d.hyp_tokens << ',' << format_double(d.hvb) << ',' << format_double(d.lr) << ','
              << format_double(d.bp);
  }
  if (!a.genre_vs.empty()) {
    const auto p = category_distribution(read_lines(a.in + ".genre"));
    const auto q = category_distribution(read_lines(a.genre_vs + ".genre"));
    std::cout << ',' << format_double(kl_divergence(p, q));
  }
  std::cout << '\n';
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string config, out;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  bool mirror = false;
};

int cmd_synth(const SynthArgs& a) {
  std::string text;
  if (!a.config.empty()) {
    std::stringstream buf;
    buf << open_in(a.config).rdbuf();
    text = buf.str() + "\n";
  }
  for (const auto& s : a.sets) text += s + "\n";
  auto config = config_from_text(text);
  if (a.seed) config.seed = *a.seed;
  if (a.mirror) config = mirror_verbosity(config);
  config.validate();
  write_task(generate_task(config), a.out);
  return 0;
}

// ---------------------------------------------------------------- experiment

int cmd_experiment(const std::string& plan_path, const std::string& out_dir) {
  auto plan = ExperimentPlan::from_file(plan_path);
  plan.apply_environment();
  const auto task = load_task(plan);
  const auto grid = run_grid(plan, task);
  std::optional<CutoffResult> cutoff;
  if (plan.cutoff_sweep) cutoff = run_cutoff_sweep(plan, task);
  emit_reports(out_dir, grid, cutoff ? &*cutoff : nullptr);
  for (const auto& row : grid.rows)
    if (row.failed) std::cerr << "cell failed: " << optimizer_name(row.optimizer) << '/'
                              << tune_condition_name(row.tune) << '/' << row.test << ": " << row.error << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Length-aware tuning of log-linear translation models"};
  app.require_subcommand(1);

  ScoreArgs score;
  auto* sc = app.add_subcommand("score", "Corpus BLEU, BP, length ratio and precisions as CSV");
  auto* top1 = sc->add_option("--nbest-top1", score.nbest_top1, "N-best file; the first entry per segment is scored");
  auto* plain = sc->add_option("--plain", score.plain, "One hypothesis per line");
  top1->excludes(plain);
  sc->add_option("--refs", score.refs, "Reference files")->required()->expected(1, -1);
  sc->add_option("--sentence-scheme", score.scheme, "Also print per-segment scores: plus1|plus1-bp|plus1-bp-grounded");

  TuneArgs tune;
  auto* tu = app.add_subcommand("tune", "Tune weights with MERT or PRO");
  tu->add_option("--task", tune.task, "Task directory written by `synth`");
  tu->add_option("--subset", tune.subset, "Tuning subset of a task: shortest|middle|longest|random|full");
  tu->add_option("--fraction", tune.fraction, "Subset fraction");
  tu->add_option("--src", tune.src, "Source file (without --task)");
  tu->add_option("--refs", tune.refs, "Reference files (without --task)")->expected(1, -1);
  tu->add_option("--nbest", tune.nbest, "Fixed n-best pools (without --task)");
  tu->add_option("--optimizer", tune.optimizer, "mert|pro");
  tu->add_option("--metric", tune.metric, "plus1|plus1-bp|plus1-bp-grounded");
  tu->add_option("--iterations", tune.iterations);
  tu->add_option("--nbest-size", tune.nbest_size);
  tu->add_option("--reruns", tune.reruns);
  tu->add_option("--seed", tune.seed);
  tu->add_option("--pro-max-gap", tune.pro_max_gap, "Cap in BLEU+1 points, or off");
  tu->add_option("--mert-restarts", tune.mert_restarts);
  tu->add_option("--out-dir", tune.out_dir)->required();

  SelectArgs sel;
  auto* se = app.add_subcommand("select", "Write a length-based subset of a dataset");
  se->add_option("--condition", sel.condition, "shortest|middle|longest|cutoff|random");
  se->add_option("--fraction", sel.fraction);
  se->add_option("--seed", sel.seed);
  se->add_option("--in", sel.in, "Input prefix (PREFIX.src, PREFIX.ref0, ...)")->required();
  se->add_option("--out", sel.out, "Output prefix")->required();

  StatsArgs st;
  auto* sta = app.add_subcommand("stats", "Dataset statistics as CSV");
  sta->add_option("--in", st.in, "Dataset prefix")->required();
  sta->add_option("--hyp", st.hyp, "Hypotheses to diagnose (hvb, lr, bp)");
  sta->add_option("--genre-vs", st.genre_vs, "Prefix whose genre labels form the second distribution of the KL divergence");
  sta->add_option("--verbosity", st.convention, "mean|first reference");

  SynthArgs syn;
  auto* sy = app.add_subcommand("synth", "Generate a synthetic task directory");
  sy->add_option("--config", syn.config, "key = value configuration file");
  sy->add_option("--set", syn.sets, "key=value override")->expected(0, -1);
  sy->add_option("--seed", syn.seed);
  sy->add_flag("--mirror", syn.mirror, "Negate the verbosity slope, keeping overall verbosity");
  sy->add_option("--out", syn.out)->required();

  std::string plan_path, exp_out;
  auto* ex = app.add_subcommand("experiment", "Run a tuning-subset grid and write reports");
  ex->add_option("--plan", plan_path)->required();
  ex->add_option("--out", exp_out)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (sc->parsed()) {
      if (score.nbest_top1.empty() == score.plain.empty()) throw Error("score needs one of --nbest-top1 or --plain");
      return cmd_score(score);
    }
    if (tu->parsed()) return cmd_tune(tune);
    if (se->parsed()) return cmd_select(sel);
    if (sta->parsed()) return cmd_stats(st);
    if (sy->parsed()) return cmd_synth(syn);
    if (ex->parsed()) return cmd_experiment(plan_path, exp_out);
  } catch (const std::exception& e) {
    std::cerr << "lengthtune: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
