#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lengthtune/harness.hpp"
#include "lengthtune/metrics.hpp"
#include "lengthtune/report.hpp"
#include "lengthtune/selection.hpp"
#include "lengthtune/synth.hpp"
#include "lengthtune/tuning.hpp"

namespace py = pybind11;
using namespace lengthtune;

namespace {

std::vector<Tokens> tokenize_all(const std::vector<std::string>& lines) {
  std::vector<Tokens> out;
  out.reserve(lines.size());
  for (const auto& line : lines) out.push_back(tokenize(line));
  return out;
}

py::dict stats_dict(const BleuStats& s, double bleu) {
  py::dict d;
  d["bleu"] = bleu;
  d["bp"] = brevity_penalty(s.hyp_len, s.ref_len);
  d["hyp_len"] = s.hyp_len;
  d["ref_len"] = s.ref_len;
  d["ratio"] = s.ref_len > 0 ? static_cast<double>(s.hyp_len) / static_cast<double>(s.ref_len) : 0.0;
  const auto p = precisions(s);
  d["precisions"] = std::vector<double>(p.begin(), p.end());
  return d;
}

// `references[i]` holds every reference for segment i.
py::dict corpus_score(const std::vector<std::string>& hypotheses,
                      const std::vector<std::vector<std::string>>& references) {
  if (hypotheses.size() != references.size()) throw Error("hypotheses and references differ in length");
  BleuStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i)
    total += compute_stats(tokenize(hypotheses[i]), tokenize_all(references[i]));
  return stats_dict(total, corpus_bleu(total));
}

double sentence_score(const std::string& hypothesis, const std::vector<std::string>& references,
                      const std::string& scheme) {
  return sentence_bleu(compute_stats(tokenize(hypothesis), tokenize_all(references)), parse_smoothing(scheme));
}

std::string config_text(const std::map<std::string, std::string>& settings) {
  std::string text;
  for (const auto& [k, v] : settings) text += k + " = " + v + "\n";
  return text;
}

py::dict synth(const std::filesystem::path& out, const std::map<std::string, std::string>& settings) {
  const auto config = config_from_text(config_text(settings));
  const auto task = generate_task(config);
  write_task(task, out);
  py::dict d;
  d["config"] = config_to_text(task.config);
  d["tuning_segments"] = task.tuning.segments.size();
  d["test_segments"] = task.test.segments.size();
  d["expressive"] = expressiveness_check(task);
  return d;
}

py::dict evaluation_dict(const Evaluation& e) {
  py::dict d;
  d["bleu"] = e.bleu;
  d["bp"] = e.bp;
  d["hvb"] = e.hvb;
  d["lr"] = e.lr;
  return d;
}

py::dict tune(const std::filesystem::path& task_dir, const std::string& optimizer, const std::string& subset,
              double fraction, int iterations, std::size_t nbest_size, int reruns, std::uint64_t seed,
              std::optional<double> pro_max_gap) {
  const auto task = read_task(task_dir);
  ExperimentPlan plan;
  plan.fraction = fraction;
  plan.seed = seed;
  plan.iterations = iterations;
  plan.nbest_size = nbest_size;
  plan.reruns = reruns;
  plan.pro_max_gap = pro_max_gap;
  plan.task_dir = task_dir;
  plan.optimizers = {parse_optimizer(optimizer)};
  plan.tune_conditions = {parse_tune_condition(subset)};
  const auto grid = run_grid(plan, task);

  py::list rows;
  for (const auto& r : grid.rows) {
    py::dict d;
    d["test"] = r.test;
    d["failed"] = r.failed;
    d["error"] = r.error;
    d["tune_vb"] = r.tune_verbosity;
    d["tune_mean_src_len"] = r.tune_mean_source_length;
    d["bleu"] = r.bleu.mean;
    d["bleu_sd"] = r.bleu.sd;
    d["bp"] = r.bp.mean;
    d["hvb"] = r.hvb.mean;
    d["lr"] = r.lr.mean;
    rows.append(d);
  }
  py::list weights;
  for (const auto& t : grid.traces)
    if (!t.iterations.empty()) {
      std::map<std::string, double> w;
      for (const auto& [name, value] : t.iterations.back().weights) w[name] = value;
      weights.append(w);
    }
  py::dict out;
  out["rows"] = rows;
  out["weights"] = weights;
  return out;
}

std::vector<std::size_t> select_lengths(const std::vector<std::size_t>& lengths, const std::string& condition,
                                        double fraction, std::uint64_t seed) {
  if (condition == "random") return select_indices_random(lengths.size(), fraction, seed);
  std::vector<Segment> segments;
  for (auto len : lengths) segments.push_back({segments.size(), Tokens(len, "x"), {{"x"}}});
  return select_indices_by_length(segments, {parse_condition(condition), fraction});
}

py::dict stats(const std::vector<std::string>& sources, const std::vector<std::vector<std::string>>& references) {
  if (sources.size() != references.size()) throw Error("sources and references differ in length");
  std::vector<Segment> segments;
  for (std::size_t i = 0; i < sources.size(); ++i) segments.push_back({i, tokenize(sources[i]), tokenize_all(references[i])});
  const auto s = dataset_stats(segments);
  py::dict d;
  d["segments"] = s.n_segments;
  d["source_tokens"] = s.n_source_tokens;
  d["reference_tokens"] = s.n_reference_tokens;
  d["mean_source_length"] = s.mean_source_length;
  d["verbosity"] = s.verbosity;
  return d;
}

std::vector<std::string> experiment(const std::string& plan_text, const std::filesystem::path& out) {
  const auto plan = ExperimentPlan::parse(plan_text);
  const auto task = load_task(plan);
  const auto grid = run_grid(plan, task);
  std::optional<CutoffResult> sweep;
  if (plan.cutoff_sweep) sweep = run_cutoff_sweep(plan, task);
  emit_reports(out, grid, sweep ? &*sweep : nullptr);
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(out)) files.push_back(entry.path().filename().string());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

PYBIND11_MODULE(_lengthtune, m) {
  m.doc() = "Length-aware tuning experiments for log-linear translation models";
  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  m.def("corpus_bleu", &corpus_score, py::arg("hypotheses"), py::arg("references"),
        "Corpus BLEU of whitespace-tokenized hypotheses; references[i] lists the references of segment i.");
  m.def("sentence_bleu", &sentence_score, py::arg("hypothesis"), py::arg("references"),
        py::arg("scheme") = "plus1", "Smoothed sentence BLEU: plus1, plus1-bp or plus1-bp-grounded.");
  m.def("synth", &synth, py::arg("out"), py::arg("settings") = std::map<std::string, std::string>{},
        "Generate a synthetic task into a directory. Settings use the config file keys.");
  m.def("tune", &tune, py::arg("task_dir"), py::arg("optimizer") = "pro", py::arg("subset") = "full",
        py::arg("fraction") = 0.5, py::arg("iterations") = 25, py::arg("nbest_size") = 1000, py::arg("reruns") = 3,
        py::arg("seed") = 1, py::arg("pro_max_gap") = std::optional<double>(10.0),
        "Tune on a subset of a task's tuning split and score on the test split.");
  m.def("select", &select_lengths, py::arg("lengths"), py::arg("condition"), py::arg("fraction") = 0.5,
        py::arg("seed") = 1, "Indices of the selected segments, in document order.");
  m.def("stats", &stats, py::arg("sources"), py::arg("references"));
  m.def("experiment", &experiment, py::arg("plan"), py::arg("out"),
        "Run an experiment plan given as text and write its reports. Returns the file names.");
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return pearson(x, y); });
  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); });
  m.def("kendall_tau", [](const std::vector<double>& x, const std::vector<double>& y) { return kendall_tau(x, y); });
}
