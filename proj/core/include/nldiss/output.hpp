#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nldiss/scenarios.hpp"

namespace nldiss {

/// "%.17g", with "nan", "inf" and "-inf" for non-finite values.
std::string format_number(double v);

struct Table {
    std::string file;  // file name relative to the output directory
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// Header row plus one line per row, '\n' line endings.
std::string to_csv(const Table& table);

/// Parses text produced by to_csv. Throws ConfigError on malformed input.
Table parse_csv(const std::string& text);

// Fixed column sets per result kind.
inline const std::vector<std::string> timeseries_columns{"time",     "sweep_value", "mean_n", "variance_n",
                                                         "mandel_q", "fidelity",    "purity", "trace_error"};
inline const std::vector<std::string> distribution_columns{"sweep_value", "n", "p_n"};
inline const std::vector<std::string> steady_columns{"sweep_value", "mandel_q", "mean_n", "purity", "converged"};

/// Time series, distribution and steady tables of a result. A series
/// parameter, when present, splits each kind into one file per series value.
std::vector<Table> result_tables(const ScenarioResult& result);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct Plot {
    enum class Kind { Lines, Bars };
    Kind kind = Kind::Lines;
    std::string file;
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    /// Lines: one curve per entry. Bars: one bar group per entry over the
    /// shared integer x positions.
    std::vector<PlotSeries> series;
    /// Bars only: curves drawn over the bars.
    std::vector<PlotSeries> overlays;
    /// Point marked with a dot and its coordinates.
    std::optional<std::pair<double, double>> marker;
};

std::string to_svg(const Plot& plot);

struct FigureOutput {
    std::vector<Table> tables;
    std::vector<Plot> plots;
};

/// Curve files shaped like the corresponding figure panels for a preset,
/// or generic curves (Q and fidelity against time or the sweep value) for
/// any other result.
FigureOutput figure_outputs(const ScenarioResult& result);

/// Provenance as JSON: version, preset, config echo, tolerances, per-point
/// status and diagnostics, and the list of files.
std::string provenance_json(const ScenarioResult& result);

/// Writes every table, the figure curves, SVGs (when `svg`) and
/// provenance.json into `dir`, creating it when needed. Returns the paths
/// written; they are also appended to result.provenance.files. Throws IoError.
std::vector<std::string> write_bundle(ScenarioResult& result, const std::string& dir, bool svg = true);

}  // namespace nldiss
