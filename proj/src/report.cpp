#include "lengthtune/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "lengthtune/synth.hpp"

namespace lengthtune {

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("fit_line: size mismatch");
  if (x.size() < 2) throw Error("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error("fit_line: all x values are equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::optional<LineFit> try_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2) return std::nullopt;
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) return std::nullopt;
  return fit_line(x, y);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

std::string scatter_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                        std::span<const ScatterSeries> series) {
  constexpr double width = 640, height = 480, left = 70, right = 20, top = 40, bottom = 60;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!any) {
        x0 = x1 = s.x[i];
        y0 = y1 = s.y[i];
        any = true;
      }
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  auto pad = [](double& lo, double& hi) {
    const double span = hi - lo;
    const double m = span > 0 ? 0.08 * span : std::max(0.05 * std::abs(lo), 0.5);
    lo -= m;
    hi += m;
  };
  pad(x0, x1);
  pad(y0, y1);
  auto sx = [&](double v) { return left + (v - x0) / (x1 - x0) * (width - left - right); };
  auto sy = [&](double v) { return height - bottom - (v - y0) / (y1 - y0) * (height - top - bottom); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<metadata><![CDATA[\n";
  for (const auto& s : series) {
    svg << "series " << s.name << '\n';
    for (std::size_t i = 0; i < s.x.size(); ++i) svg << "point " << format_double(s.x[i]) << ' ' << format_double(s.y[i]) << '\n';
    if (auto fit = try_fit(s.x, s.y))
      svg << "fit slope=" << format_double(fit->slope) << " intercept=" << format_double(fit->intercept) << '\n';
  }
  svg << "]]></metadata>\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right << "\" y2=\""
      << height - bottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << height - bottom
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    svg << "<text x=\"" << px(sx(xv)) << "\" y=\"" << height - bottom + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << px(xv) << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << px(sy(yv) + 3)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << px(yv) << "</text>\n";
  }
  svg << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(x_label) << "</text>\n";
  svg << "<text x=\"16\" y=\"" << (top + height - bottom) / 2 << "\" transform=\"rotate(-90 16 "
      << (top + height - bottom) / 2 << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << xml_escape(y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % std::size(colors)];
    for (std::size_t i = 0; i < s.x.size(); ++i)
      svg << "<circle cx=\"" << px(sx(s.x[i])) << "\" cy=\"" << px(sy(s.y[i])) << "\" r=\"4\" fill=\"" << color
          << "\"/>\n";
    std::string legend = s.name;
    if (auto fit = try_fit(s.x, s.y)) {
      const auto [lo, hi] = std::minmax_element(s.x.begin(), s.x.end());
      svg << "<line x1=\"" << px(sx(*lo)) << "\" y1=\"" << px(sy(fit->intercept + fit->slope * *lo)) << "\" x2=\""
          << px(sx(*hi)) << "\" y2=\"" << px(sy(fit->intercept + fit->slope * *hi)) << "\" stroke=\"" << color
          << "\" stroke-width=\"1.5\"/>\n";
      legend += ": slope=" + format_double(fit->slope) + " intercept=" + format_double(fit->intercept);
    }
    svg << "<text x=\"" << left + 10 << "\" y=\"" << top + 14 + 14 * static_cast<double>(k) << "\" fill=\"" << color
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(legend) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string summary_csv(std::span<const ReportRow> rows) {
  std::ostringstream out;
  out << kSummarySchema << '\n'
      << "optimizer,tune_condition,test_condition,tune_vb,tune_mean_src_len,reruns,"
         "bleu_mean,bleu_sd,bp_mean,bp_sd,hvb_mean,hvb_sd,lr_mean,lr_sd,status,error\n";
  for (const auto& r : rows) {
    out << optimizer_name(r.optimizer) << ',' << tune_condition_name(r.tune) << ',' << r.test << ',';
    if (r.failed) {
      out << ",," << r.reruns << ",,,,,,,,,failed," << csv_field(r.error) << '\n';
      continue;
    }
    out << format_double(r.tune_verbosity) << ',' << format_double(r.tune_mean_source_length) << ',' << r.reruns;
    for (const auto* s : {&r.bleu, &r.bp, &r.hvb, &r.lr}) out << ',' << format_double(s->mean) << ',' << format_double(s->sd);
    out << ",ok,\n";
  }
  return out.str();
}

std::string cutoff_csv(std::span<const CutoffRow> rows) {
  std::ostringstream out;
  out << "# lengthtune cutoff v1\n"
      << "fraction,rerun,tune_vb,tune_mean_src_len,bleu,bp,hvb,lr,status,error\n";
  for (const auto& r : rows) {
    out << format_double(r.fraction) << ',' << r.rerun << ',';
    if (r.failed) {
      out << ",,,,,,failed," << csv_field(r.error) << '\n';
      continue;
    }
    out << format_double(r.tune_verbosity) << ',' << format_double(r.tune_mean_source_length) << ','
        << format_double(r.test.bleu) << ',' << format_double(r.test.bp) << ',' << format_double(r.test.hvb) << ','
        << format_double(r.test.lr) << ",ok,\n";
  }
  return out.str();
}

std::string trajectory_csv(std::span<const TraceRecord> traces) {
  std::ostringstream out;
  out << "# lengthtune trajectories v1\n"
      << "optimizer,subset,rerun,iteration,feature,weight,word_penalty\n";
  for (const auto& t : traces)
    for (const auto& it : t.iterations)
      for (const auto& [name, value] : it.weights)
        out << optimizer_name(t.optimizer) << ',' << csv_field(t.subset) << ',' << t.rerun << ',' << it.iteration << ','
            << csv_field(name) << ',' << format_double(value) << ',' << (name == kWordPenalty ? 1 : 0) << '\n';
  return out.str();
}

namespace {

struct GridSeries {
  std::vector<double> vb, msl, hvb, lr;
};

std::map<std::string, GridSeries> full_test_series(std::span<const ReportRow> rows) {
  std::map<std::string, GridSeries> out;
  for (const auto& r : rows) {
    if (r.failed || r.test != "full") continue;
    auto& s = out[std::string(optimizer_name(r.optimizer))];
    s.vb.push_back(r.tune_verbosity);
    s.msl.push_back(r.tune_mean_source_length);
    s.hvb.push_back(r.hvb.mean);
    s.lr.push_back(r.lr.mean);
  }
  return out;
}

std::string correlation_or_na(std::span<const double> x, std::span<const double> y) {
  try {
    return format_double(pearson(x, y));
  } catch (const Error&) {
    return "NA";
  }
}

}  // namespace

std::string correlations_csv(std::span<const ReportRow> rows) {
  std::ostringstream out;
  out << "# lengthtune correlations v1\n"
      << "optimizer,x,y,points,pearson\n";
  for (const auto& [name, s] : full_test_series(rows)) {
    out << name << ",tune_vb,test_hvb," << s.vb.size() << ',' << correlation_or_na(s.vb, s.hvb) << '\n';
    out << name << ",tune_mean_src_len,test_lr," << s.msl.size() << ',' << correlation_or_na(s.msl, s.lr) << '\n';
  }
  return out.str();
}

void emit_reports(const std::filesystem::path& dir, const GridResult& grid, const CutoffResult* cutoff) {
  if (grid.rows.empty()) throw Error("emit_reports: no rows");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());

  write_file(dir / "summary.csv", summary_csv(grid.rows));
  write_file(dir / "correlations.csv", correlations_csv(grid.rows));
  write_file(dir / "trajectories.csv", trajectory_csv(grid.traces));

  std::vector<ScatterSeries> vb_series, lr_series;
  for (const auto& [name, s] : full_test_series(grid.rows)) {
    vb_series.push_back({name, s.vb, s.hvb});
    lr_series.push_back({name, s.msl, s.lr});
  }
  write_file(dir / "tuning_vb_vs_test_hvb.svg",
             scatter_svg("Tuning verbosity vs. test hypothesis verbosity", "tuning vb", "test hvb", vb_series));
  write_file(dir / "tuning_length_vs_test_lr.svg",
             scatter_svg("Tuning source length vs. test length ratio", "tuning mean source length", "test lr",
                         lr_series));

  if (cutoff) {
    write_file(dir / "cutoff.csv", cutoff_csv(cutoff->rows));
    write_file(dir / "cutoff_trajectories.csv", trajectory_csv(cutoff->traces));
    ScatterSeries bp{"pro", {}, {}};
    for (const auto& r : cutoff->rows) {
      if (r.failed) continue;
      bp.x.push_back(r.fraction);
      bp.y.push_back(r.test.bp);
    }
    const ScatterSeries one[] = {bp};
    write_file(dir / "cutoff_bp.svg", scatter_svg("Kept longest fraction vs. test BP", "kept fraction", "test BP", one));
  }
}

}  // namespace lengthtune
