#pragma once

// CSV tables and SVG scatter plots for experiment results. Every number is
// written with format_double, so a value printed in a plot is the same string
// that appears in the CSV it came from.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lengthtune/harness.hpp"

namespace lengthtune {

inline constexpr const char* kSummarySchema = "# lengthtune summary v1";

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares of y on x. Throws for fewer than two points or when
// all x are equal.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct ScatterSeries {
  std::string name;
  std::vector<double> x, y;
};

// Self-contained SVG: axes, points, one fitted line per series with at least
// two distinct x values, and a <metadata> block holding the raw points and
// the fit coefficients.
std::string scatter_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                        std::span<const ScatterSeries> series);

std::string summary_csv(std::span<const ReportRow> rows);
std::string cutoff_csv(std::span<const CutoffRow> rows);
// One line per (trace, iteration, feature); the word penalty is flagged.
std::string trajectory_csv(std::span<const TraceRecord> traces);
// Correlations over the grid's full-test rows, per optimizer.
std::string correlations_csv(std::span<const ReportRow> rows);

// Writes summary.csv, correlations.csv, trajectories.csv and the scatter
// plots for the grid, plus cutoff.csv, cutoff_trajectories.csv and
// cutoff_bp.svg when a sweep is given. Throws when `rows` is empty or the
// directory cannot be written.
void emit_reports(const std::filesystem::path& dir, const GridResult& grid, const CutoffResult* cutoff = nullptr);

}  // namespace lengthtune
