#include "nldiss/output.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nldiss/errors.hpp"

namespace nldiss {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::string short_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string pretty_parameter(const std::string& p)
{
    static const std::map<std::string, std::string> names{
        {"alpha", "α"},        {"alpha0", "α₀"},       {"epsilon", "ε = Γ/γ"},
        {"nbar", "n̄"},         {"omega", "Ω"},         {"gamma_linear", "Γ"},
        {"gamma_nonlinear", "γ"}, {"k", "k"},          {"dim", "dim"},
    };
    const auto it = names.find(p);
    return it == names.end() ? p : it->second;
}

std::string time_label(const ScenarioResult& r)
{
    return r.time_unit == "gamma" ? "γt" : "Γt";
}

// File-name suffix for a series value, e.g. "_epsilon5".
std::string series_suffix(const ScenarioResult& r, double value)
{
    if (r.series_parameter.empty())
        return "";
    return "_" + r.series_parameter + short_number(value);
}

// Series values in first-seen order; a single NaN without a series.
std::vector<double> series_values(const ScenarioResult& r)
{
    std::vector<double> out;
    for (const auto& p : r.points) {
        const bool seen = std::any_of(out.begin(), out.end(), [&](double v) {
            return v == p.series_value || (std::isnan(v) && std::isnan(p.series_value));
        });
        if (!seen)
            out.push_back(p.series_value);
    }
    return out;
}

bool same_series(double a, double b)
{
    return a == b || (std::isnan(a) && std::isnan(b));
}

const DistributionRecord* find_record(const PointResult& p, const std::string& label)
{
    for (const auto& d : p.distributions)
        if (d.label == label)
            return &d;
    return nullptr;
}

const DistributionRecord* primary_record(const PointResult& p)
{
    if (const auto* d = find_record(p, "state"))
        return d;
    if (const auto* d = find_record(p, "exact"))
        return d;
    return p.distributions.empty() ? nullptr : &p.distributions.front();
}

// Largest n with p_n above the threshold in any of the distributions, at least `floor`.
int support_end(const std::vector<const DiagonalDistribution*>& ds, double threshold = 1e-3, int floor = 6)
{
    int end = floor;
    for (const auto* d : ds)
        for (int n = 0; n < d->dim(); ++n)
            if ((*d)[n] > threshold)
                end = std::max(end, n + 2);
    for (const auto* d : ds)
        end = std::min(end, d->dim());
    return end;
}

std::string xml_escape(const std::string& s)
{
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

std::string coord(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::vector<double> nice_ticks(double lo, double hi)
{
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (span / step <= 6.0)
            break;
    }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step)
        ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    return ticks;
}

std::vector<double> log_ticks(double lo, double hi)
{
    std::vector<double> ticks;
    const int a = static_cast<int>(std::floor(std::log10(lo)));
    const int b = static_cast<int>(std::ceil(std::log10(hi)));
    const bool dense = b - a <= 2;
    for (int e = a; e <= b; ++e)
        for (double m : dense ? std::vector<double>{1, 2, 5} : std::vector<double>{1}) {
            const double t = m * std::pow(10.0, e);
            if (t >= lo * (1 - 1e-12) && t <= hi * (1 + 1e-12))
                ticks.push_back(t);
        }
    return ticks;
}

const char* const palette[] = {"#1f3b73", "#b03a2e", "#1e8449", "#7d3c98", "#b9770e", "#2e86c1"};
// solid, dotted, dashed, dash-dotted
const char* const dashes[] = {"", "2,3", "7,4", "9,3,2,3"};

}  // namespace

std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string to_csv(const Table& table)
{
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        out += (i ? "," : "") + table.columns[i];
    out += "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out += (i ? "," : "") + format_number(row[i]);
        out += "\n";
    }
    return out;
}

Table parse_csv(const std::string& text)
{
    Table t;
    std::istringstream in(text);
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> cells;
        std::stringstream ss(l);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        return cells;
    };
    if (!std::getline(in, line))
        throw ConfigError("csv: empty input");
    t.columns = split(line);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        const auto cells = split(line);
        if (cells.size() != t.columns.size())
            throw ConfigError("csv line " + std::to_string(lineno) + ": expected " +
                              std::to_string(t.columns.size()) + " cells");
        std::vector<double> row;
        for (const auto& c : cells) {
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
            if (ec != std::errc() || ptr != c.data() + c.size())
                throw ConfigError("csv line " + std::to_string(lineno) + ": bad number '" + c + "'");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::vector<Table> result_tables(const ScenarioResult& r)
{
    std::vector<Table> tables;
    std::vector<std::string> labels;
    for (const auto& p : r.points)
        for (const auto& d : p.distributions)
            if (std::find(labels.begin(), labels.end(), d.label) == labels.end())
                labels.push_back(d.label);

    for (double s : series_values(r)) {
        const std::string suffix = series_suffix(r, s);
        auto in_series = [&](const PointResult& p) { return p.ok && same_series(p.series_value, s); };

        if (r.mode == SolverSpec::Mode::Propagate) {
            Table t{r.name + "_timeseries" + suffix + ".csv", timeseries_columns, {}};
            for (const auto& p : r.points)
                if (in_series(p))
                    for (const auto& x : p.series)
                        t.rows.push_back({x.time, p.sweep_value, x.mean_n, x.variance_n, x.mandel_q, x.fidelity,
                                          x.purity, x.trace_error});
            tables.push_back(std::move(t));
        } else {
            auto steady_table = [&](const std::string& file, auto member) {
                Table t{file, steady_columns, {}};
                bool any = false;
                for (const auto& p : r.points) {
                    if (!in_series(p) || !(p.*member))
                        continue;
                    const SteadyReport& s = *(p.*member);
                    t.rows.push_back({p.sweep_value, s.mandel_q, s.mean_n, s.purity, s.converged ? 1.0 : 0.0});
                    any = true;
                }
                if (any)
                    tables.push_back(std::move(t));
            };
            steady_table(r.name + "_steady" + suffix + ".csv", &PointResult::steady);
            steady_table(r.name + "_steady_approximate" + suffix + ".csv", &PointResult::approximate);
            steady_table(r.name + "_steady_recurrence" + suffix + ".csv", &PointResult::recurrence);
        }

        for (const auto& label : labels) {
            Table t{r.name + "_distribution_" + label + suffix + ".csv", distribution_columns, {}};
            for (const auto& p : r.points) {
                if (!in_series(p))
                    continue;
                if (const auto* d = find_record(p, label))
                    for (int n = 0; n < d->distribution.dim(); ++n)
                        t.rows.push_back({p.sweep_value, static_cast<double>(n), d->distribution[n]});
            }
            if (!t.rows.empty())
                tables.push_back(std::move(t));
        }
    }
    return tables;
}

std::string to_svg(const Plot& plot)
{
    constexpr double W = 680, H = 420, L = 78, R = 170, T = 44, B = 58;
    const double pw = W - L - R, ph = H - T - B;
    const bool bars = plot.kind == Plot::Kind::Bars;

    double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
    auto extend = [&](const PlotSeries& s) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (plot.log_x && s.x[i] <= 0))
                continue;
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            ylo = std::min(ylo, s.y[i]);
            yhi = std::max(yhi, s.y[i]);
        }
    };
    for (const auto& s : plot.series)
        extend(s);
    for (const auto& s : plot.overlays)
        extend(s);
    if (!std::isfinite(xlo)) {
        xlo = 0;
        xhi = 1;
        ylo = 0;
        yhi = 1;
    }
    if (bars) {
        xlo -= 0.5;
        xhi += 0.5;
        ylo = std::min(0.0, ylo);
    }
    if (xhi <= xlo)
        xhi = xlo + 1;
    if (yhi - ylo < 1e-12) {
        ylo -= 0.5;
        yhi += 0.5;
    } else if (!bars) {
        const double pad = 0.05 * (yhi - ylo);
        ylo -= pad;
        yhi += pad;
    } else {
        yhi += 0.05 * (yhi - ylo);
    }

    auto px = [&](double x) {
        const double u = plot.log_x ? (std::log10(x) - std::log10(xlo)) / (std::log10(xhi) - std::log10(xlo))
                                    : (x - xlo) / (xhi - xlo);
        return L + u * pw;
    };
    auto py = [&](double y) { return T + (1.0 - (y - ylo) / (yhi - ylo)) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
      << W << " " << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << coord(L + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
      << xml_escape(plot.title) << "</text>\n";

    // axes and ticks
    o << "<rect x=\"" << coord(L) << "\" y=\"" << coord(T) << "\" width=\"" << coord(pw) << "\" height=\""
      << coord(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    std::vector<double> xt;
    if (bars) {
        const int first = static_cast<int>(std::ceil(xlo));
        const int last = static_cast<int>(std::floor(xhi));
        const int stride = std::max(1, (last - first) / 12 + 1);
        for (int n = first; n <= last; n += stride)
            xt.push_back(n);
    } else {
        xt = plot.log_x ? log_ticks(xlo, xhi) : nice_ticks(xlo, xhi);
    }
    for (double t : xt) {
        const double x = px(t);
        o << "<line x1=\"" << coord(x) << "\" y1=\"" << coord(T + ph) << "\" x2=\"" << coord(x) << "\" y2=\""
          << coord(T + ph + 5) << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << coord(x) << "\" y=\"" << coord(T + ph + 18) << "\" text-anchor=\"middle\">"
          << short_number(t) << "</text>\n";
    }
    for (double t : nice_ticks(ylo, yhi)) {
        const double y = py(t);
        o << "<line x1=\"" << coord(L - 5) << "\" y1=\"" << coord(y) << "\" x2=\"" << coord(L) << "\" y2=\""
          << coord(y) << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << coord(L - 8) << "\" y=\"" << coord(y + 4) << "\" text-anchor=\"end\">"
          << short_number(t) << "</text>\n";
    }
    if (ylo < 0 && yhi > 0 && !bars)
        o << "<line x1=\"" << coord(L) << "\" y1=\"" << coord(py(0)) << "\" x2=\"" << coord(L + pw) << "\" y2=\""
          << coord(py(0)) << "\" stroke=\"#999\" stroke-width=\"0.5\"/>\n";
    o << "<text x=\"" << coord(L + pw / 2) << "\" y=\"" << coord(H - 14) << "\" text-anchor=\"middle\">"
      << xml_escape(plot.x_label) << "</text>\n";
    o << "<text x=\"18\" y=\"" << coord(T + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << coord(T + ph / 2) << ")\">" << xml_escape(plot.y_label) << "</text>\n";

    auto polyline = [&](const PlotSeries& s, const char* color, const char* dash) {
        std::string pts;
        auto flush = [&] {
            if (pts.empty())
                return;
            o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\"";
            if (*dash)
                o << " stroke-dasharray=\"" << dash << "\"";
            o << " points=\"" << pts << "\"/>\n";
            pts.clear();
        };
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (plot.log_x && s.x[i] <= 0)) {
                flush();
                continue;
            }
            pts += (pts.empty() ? "" : " ") + coord(px(s.x[i])) + "," + coord(py(s.y[i]));
        }
        flush();
    };

    std::vector<std::pair<std::string, std::string>> legend;  // label, swatch markup
    const std::size_t groups = plot.series.size();
    for (std::size_t k = 0; k < groups; ++k) {
        const auto& s = plot.series[k];
        const char* color = palette[k % 6];
        if (bars) {
            const double slot = pw / (xhi - xlo);
            const double bw = 0.8 * slot / static_cast<double>(std::max<std::size_t>(groups, 1));
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.y[i]))
                    continue;
                const double x0 = px(s.x[i]) - 0.4 * slot + static_cast<double>(k) * bw;
                const double y0 = py(std::max(0.0, s.y[i]));
                o << "<rect x=\"" << coord(x0) << "\" y=\"" << coord(y0) << "\" width=\"" << coord(bw)
                  << "\" height=\"" << coord(py(0) - y0) << "\" fill=\"" << color << "\" fill-opacity=\""
                  << (groups > 1 ? "0.85" : "0.6") << "\"/>\n";
            }
            legend.push_back({s.label, std::string("<rect width=\"14\" height=\"10\" y=\"-9\" fill=\"") + color + "\"/>"});
        } else {
            const char* dash = dashes[k % 4];
            polyline(s, color, dash);
            std::string sw = std::string("<line x1=\"0\" y1=\"-4\" x2=\"24\" y2=\"-4\" stroke=\"") + color +
                             "\" stroke-width=\"1.8\"";
            if (*dash)
                sw += std::string(" stroke-dasharray=\"") + dash + "\"";
            legend.push_back({s.label, sw + "/>"});
        }
    }
    for (std::size_t k = 0; k < plot.overlays.size(); ++k) {
        polyline(plot.overlays[k], "black", "");
        legend.push_back({plot.overlays[k].label,
                          "<line x1=\"0\" y1=\"-4\" x2=\"24\" y2=\"-4\" stroke=\"black\" stroke-width=\"1.8\"/>"});
    }
    if (plot.marker) {
        const auto [mx, my] = *plot.marker;
        o << "<circle cx=\"" << coord(px(mx)) << "\" cy=\"" << coord(py(my)) << "\" r=\"4.5\" fill=\"none\" "
          << "stroke=\"#b03a2e\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << coord(px(mx)) << "\" y=\"" << coord(py(my) + 20) << "\" text-anchor=\"middle\" "
          << "fill=\"#b03a2e\">min (" << short_number(mx) << ", " << short_number(my) << ")</text>\n";
    }
    for (std::size_t i = 0; i < legend.size(); ++i) {
        const double y = T + 16 + 20 * static_cast<double>(i);
        o << "<g transform=\"translate(" << coord(L + pw + 14) << " " << coord(y) << ")\">" << legend[i].second
          << "<text x=\"30\" y=\"0\">" << xml_escape(legend[i].first) << "</text></g>\n";
    }
    o << "</svg>\n";
    return o.str();
}

FigureOutput figure_outputs(const ScenarioResult& r)
{
    FigureOutput out;
    const std::string& preset = r.provenance.preset;
    const std::string tl = time_label(r);

    auto ok_points = [&] {
        std::vector<const PointResult*> v;
        for (const auto& p : r.points)
            if (p.ok)
                v.push_back(&p);
        return v;
    };

    // Lines of one time-series field against time, one curve per sweep point.
    auto time_curves = [&](const std::string& stem, const std::string& column, double TimeSample::*field,
                           const std::string& ylabel, bool log_x) {
        Table t{stem + ".csv", {r.time_unit == "gamma" ? "t_gamma" : "t_Gamma", r.sweep_parameter.empty() ? "point" : r.sweep_parameter, column}, {}};
        Plot plot;
        plot.file = stem + ".svg";
        plot.x_label = tl;
        plot.y_label = ylabel;
        plot.log_x = log_x;
        for (const auto* p : ok_points()) {
            PlotSeries s;
            s.label = r.sweep_parameter.empty() ? "run" : pretty_parameter(r.sweep_parameter) + " = " + short_number(p->sweep_value);
            for (const auto& x : p->series) {
                t.rows.push_back({x.time, p->sweep_value, x.*field});
                s.x.push_back(x.time);
                s.y.push_back(x.*field);
            }
            plot.series.push_back(std::move(s));
        }
        out.tables.push_back(std::move(t));
        out.plots.push_back(std::move(plot));
    };

    if (preset == "fig1a") {
        time_curves("fig1a_fidelity", "fidelity", &TimeSample::fidelity, "fidelity ⟨2|ρ|2⟩", false);
        out.plots.back().title = "Fock |2⟩ from |α⟩, γ = Γ/5";
        return out;
    }
    if (preset == "fig1c") {
        time_curves("fig1c_mandel_q", "mandel_q", &TimeSample::mandel_q, "Q", true);
        out.plots.back().title = "Mandel Q under A = a(a†a − 1), γ = Γ/5";
        return out;
    }
    if (preset == "fig1b" || preset == "fig1d") {
        std::vector<const PointResult*> pts;
        for (const auto* p : ok_points())
            if (primary_record(*p))
                pts.push_back(p);
        if (preset == "fig1d" && !pts.empty())
            pts = {*std::max_element(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->sweep_value < b->sweep_value; })};
        std::vector<const DiagonalDistribution*> ds;
        for (const auto* p : pts)
            ds.push_back(&primary_record(*p)->distribution);
        const int end = support_end(ds);

        Plot plot;
        plot.kind = Plot::Kind::Bars;
        plot.file = preset + "_distribution.svg";
        plot.x_label = "n";
        plot.y_label = "p_n";
        if (preset == "fig1b") {
            Table t{"fig1b_distribution.csv", {"alpha", "t_Gamma", "n", "p_n"}, {}};
            plot.title = "Photon numbers at maximal fidelity";
            for (const auto* p : pts) {
                const auto* d = primary_record(*p);
                PlotSeries s{"α = " + short_number(p->sweep_value), {}, {}};
                for (int n = 0; n < d->distribution.dim(); ++n) {
                    t.rows.push_back({p->sweep_value, d->time, static_cast<double>(n), d->distribution[n]});
                    if (n < end) {
                        s.x.push_back(n);
                        s.y.push_back(d->distribution[n]);
                    }
                }
                plot.series.push_back(std::move(s));
            }
            out.tables.push_back(std::move(t));
        } else if (!pts.empty()) {
            const PointResult& p = *pts.front();
            const auto* d = primary_record(p);
            const auto* ref = find_record(p, "poisson");
            Table t{"fig1d_distribution.csv", {"n", "p_n", "poisson"}, {}};
            plot.title = "Minimal Q, α = " + short_number(p.sweep_value) + ", Γt = " + short_number(d->time);
            PlotSeries s{"state", {}, {}}, pois{"Poisson, same mean", {}, {}};
            for (int n = 0; n < d->distribution.dim(); ++n) {
                const double pr = ref ? ref->distribution[n] : nan;
                t.rows.push_back({static_cast<double>(n), d->distribution[n], pr});
                if (n < end) {
                    s.x.push_back(n);
                    s.y.push_back(d->distribution[n]);
                    pois.x.push_back(n);
                    pois.y.push_back(pr);
                }
            }
            plot.series.push_back(std::move(s));
            if (ref)
                plot.overlays.push_back(std::move(pois));
            out.tables.push_back(std::move(t));
        }
        out.plots.push_back(std::move(plot));
        return out;
    }
    if (preset == "fig2a") {
        Table t{"fig2a_mandel_q.csv", {"alpha0", "epsilon", "mandel_q"}, {}};
        Plot plot{Plot::Kind::Lines, "fig2a_mandel_q.svg", "Steady Q, A = a(a†a − 1)", "α₀ = Ω/γ", "Q", true, {}, {}, {}};
        Table dt{"fig2a_distribution.csv", {"epsilon", "n", "p_n"}, {}};
        Plot dplot{Plot::Kind::Bars, "fig2a_distribution.svg", "Steady distribution at α₀ = 150", "n", "p_n", false, {}, {}, {}};
        std::vector<const DiagonalDistribution*> ds;
        for (double s : series_values(r))
            for (const auto* p : ok_points())
                if (same_series(p->series_value, s))
                    if (const auto* d = find_record(*p, "exact"))
                        ds.push_back(&d->distribution);
        const int end = support_end(ds);
        for (double s : series_values(r)) {
            PlotSeries curve{"Γ = " + short_number(s) + "γ", {}, {}};
            for (const auto* p : ok_points()) {
                if (!same_series(p->series_value, s) || !p->steady)
                    continue;
                t.rows.push_back({p->sweep_value, s, p->steady->mandel_q});
                curve.x.push_back(p->sweep_value);
                curve.y.push_back(p->steady->mandel_q);
                if (const auto* d = find_record(*p, "exact")) {
                    PlotSeries bars{"Γ = " + short_number(s) + "γ", {}, {}};
                    for (int n = 0; n < d->distribution.dim(); ++n) {
                        dt.rows.push_back({s, static_cast<double>(n), d->distribution[n]});
                        if (n < end) {
                            bars.x.push_back(n);
                            bars.y.push_back(d->distribution[n]);
                        }
                    }
                    dplot.series.push_back(std::move(bars));
                }
            }
            plot.series.push_back(std::move(curve));
        }
        out.tables.push_back(std::move(t));
        out.tables.push_back(std::move(dt));
        out.plots.push_back(std::move(plot));
        out.plots.push_back(std::move(dplot));
        return out;
    }
    if (preset == "fig2b" || preset == "fig2c") {
        const std::string fname = preset == "fig2b" ? "a(a†a − 1)" : "a(a†a − 1)²";
        Table t{preset + "_mandel_q.csv", {"alpha0", "exact_q", "approximate_q", "recurrence_q"}, {}};
        Plot plot{Plot::Kind::Lines, preset + "_mandel_q.svg", "Exact vs approximate equation, A = " + fname, "α₀ = Ω/γ", "Q", true, {}, {}, {}};
        PlotSeries exact{"exact", {}, {}}, approx{"approximate", {}, {}};
        Table dt{preset + "_distribution.csv", {"n", "exact", "approximate"}, {}};
        Plot dplot{Plot::Kind::Bars, preset + "_distribution.svg", "", "n", "p_n", false, {}, {}, {}};
        for (const auto* p : ok_points()) {
            const double eq = p->steady ? p->steady->mandel_q : nan;
            const double aq = p->approximate ? p->approximate->mandel_q : nan;
            const double rq = p->recurrence ? p->recurrence->mandel_q : nan;
            t.rows.push_back({p->sweep_value, eq, aq, rq});
            exact.x.push_back(p->sweep_value);
            exact.y.push_back(eq);
            approx.x.push_back(p->sweep_value);
            approx.y.push_back(aq);
            const auto* de = find_record(*p, "exact");
            const auto* da = find_record(*p, "approximate");
            if (de && da && dplot.series.empty()) {
                dplot.title = "Steady distribution at α₀ = " + short_number(p->sweep_value);
                const int end = support_end({&de->distribution, &da->distribution});
                PlotSeries be{"exact", {}, {}}, ba{"approximate", {}, {}};
                for (int n = 0; n < de->distribution.dim(); ++n) {
                    dt.rows.push_back({static_cast<double>(n), de->distribution[n], da->distribution[n]});
                    if (n < end) {
                        be.x.push_back(n);
                        be.y.push_back(de->distribution[n]);
                        ba.x.push_back(n);
                        ba.y.push_back(da->distribution[n]);
                    }
                }
                dplot.series = {std::move(be), std::move(ba)};
            }
        }
        plot.series = {std::move(exact), std::move(approx)};
        out.tables.push_back(std::move(t));
        out.plots.push_back(std::move(plot));
        if (!dt.rows.empty()) {
            out.tables.push_back(std::move(dt));
            out.plots.push_back(std::move(dplot));
        }
        return out;
    }
    if (preset == "fig2d") {
        Table t{"fig2d_mandel_q.csv", {"nbar", "mandel_q", "recurrence_q"}, {}};
        Plot plot{Plot::Kind::Lines, "fig2d_mandel_q.svg", "Thermal driving only, A = a(a†a − 1)³", "n̄", "Q", false, {}, {}, {}};
        PlotSeries curve{"steady state", {}, {}};
        for (const auto* p : ok_points()) {
            const double q = p->steady ? p->steady->mandel_q : nan;
            t.rows.push_back({p->sweep_value, q, p->recurrence ? p->recurrence->mandel_q : nan});
            curve.x.push_back(p->sweep_value);
            curve.y.push_back(q);
        }
        double best = INFINITY;
        for (std::size_t i = 0; i < curve.y.size(); ++i)
            if (curve.y[i] < best) {
                best = curve.y[i];
                plot.marker = std::make_pair(curve.x[i], curve.y[i]);
            }
        plot.series.push_back(std::move(curve));
        out.tables.push_back(std::move(t));
        out.plots.push_back(std::move(plot));
        return out;
    }

    // Generic curves for configs.
    if (r.mode == SolverSpec::Mode::Propagate) {
        time_curves(r.name + "_mandel_q", "mandel_q", &TimeSample::mandel_q, "Q", r.log_time);
        const bool fidelity = std::any_of(r.points.begin(), r.points.end(), [](const PointResult& p) {
            return std::any_of(p.series.begin(), p.series.end(), [](const TimeSample& s) { return !std::isnan(s.fidelity); });
        });
        if (fidelity)
            time_curves(r.name + "_fidelity", "fidelity", &TimeSample::fidelity, "fidelity", r.log_time);
        out.tables.clear();  // the time series file already carries these columns
        return out;
    }
    if (r.sweep_parameter.empty())
        return out;
    Plot plot{Plot::Kind::Lines, r.name + "_mandel_q.svg", r.name, pretty_parameter(r.sweep_parameter), "Q", false, {}, {}, {}};
    bool positive = true;
    double lo = INFINITY, hi = 0;
    for (double s : series_values(r)) {
        const std::string tag = r.series_parameter.empty() ? "" : pretty_parameter(r.series_parameter) + " = " + short_number(s) + " ";
        PlotSeries main{tag + "steady", {}, {}}, approx{tag + "approximate", {}, {}}, rec{tag + "recurrence", {}, {}};
        for (const auto* p : ok_points()) {
            if (!same_series(p->series_value, s))
                continue;
            positive = positive && p->sweep_value > 0;
            lo = std::min(lo, p->sweep_value);
            hi = std::max(hi, p->sweep_value);
            if (p->steady) {
                main.x.push_back(p->sweep_value);
                main.y.push_back(p->steady->mandel_q);
            }
            if (p->approximate) {
                approx.x.push_back(p->sweep_value);
                approx.y.push_back(p->approximate->mandel_q);
            }
            if (p->recurrence) {
                rec.x.push_back(p->sweep_value);
                rec.y.push_back(p->recurrence->mandel_q);
            }
        }
        for (auto* c : {&main, &approx, &rec})
            if (!c->x.empty())
                plot.series.push_back(std::move(*c));
    }
    plot.log_x = positive && hi > 20 * lo;
    out.plots.push_back(std::move(plot));
    return out;
}

std::string provenance_json(const ScenarioResult& r)
{
    using json = nlohmann::ordered_json;
    json j;
    j["version"] = r.provenance.version;
    j["preset"] = r.provenance.preset;
    j["name"] = r.name;
    j["sweep_parameter"] = r.sweep_parameter;
    j["series_parameter"] = r.series_parameter;
    j["config"] = r.provenance.config_echo;
    json tol = json::object();
    for (const auto& [k, v] : r.provenance.tolerances)
        tol[k] = v;
    j["tolerances"] = tol;
    json points = json::array();
    for (const auto& p : r.points) {
        json e;
        e["sweep_value"] = format_number(p.sweep_value);
        e["series_value"] = format_number(p.series_value);
        e["ok"] = p.ok;
        if (!p.ok)
            e["error"] = p.error;
        for (const auto& [key, rep] : {std::pair{"steady", &p.steady}, std::pair{"approximate", &p.approximate},
                                       std::pair{"recurrence", &p.recurrence}})
            if (*rep) {
                e[key] = {{"method", (*rep)->method},
                          {"converged", (*rep)->converged},
                          {"residual", format_number((*rep)->residual)},
                          {"mandel_q", format_number((*rep)->mandel_q)}};
            }
        const auto& d = p.diagnostics;
        e["diagnostics"] = {{"max_trace_error", format_number(d.max_trace_error)},
                            {"max_hermiticity_error", format_number(d.max_hermiticity_error)},
                            {"min_eigenvalue", format_number(d.min_eigenvalue)},
                            {"max_top_population", format_number(d.max_top_population)},
                            {"max_step_trace_correction", format_number(d.max_step_trace_correction)},
                            {"accepted_steps", d.accepted_steps},
                            {"rejected_steps", d.rejected_steps},
                            {"rhs_evaluations", d.rhs_evaluations}};
        points.push_back(std::move(e));
    }
    j["points"] = std::move(points);
    j["files"] = r.provenance.files;
    return j.dump(2) + "\n";
}

std::vector<std::string> write_bundle(ScenarioResult& result, const std::string& dir, bool svg)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create output directory '" + dir + "': " + ec.message());

    std::vector<std::string> written;
    auto put = [&](const std::string& name, const std::string& content) {
        const std::string path = (fs::path(dir) / name).string();
        std::ofstream f(path, std::ios::binary);
        f << content;
        f.close();
        if (!f)
            throw IoError("cannot write '" + path + "'");
        written.push_back(path);
    };

    std::set<std::string> names;
    auto unique = [&](const std::string& name) {
        if (!names.insert(name).second)
            throw IoError("output file name collision: " + name);
        return name;
    };
    for (const auto& t : result_tables(result))
        put(unique(t.file), to_csv(t));
    const FigureOutput fig = figure_outputs(result);
    for (const auto& t : fig.tables)
        put(unique(t.file), to_csv(t));
    if (svg)
        for (const auto& p : fig.plots)
            put(unique(p.file), to_svg(p));

    for (const auto& w : written)
        result.provenance.files.push_back(fs::path(w).filename().string());
    result.provenance.files.push_back("provenance.json");
    put("provenance.json", provenance_json(result));
    return written;
}

}  // namespace nldiss
