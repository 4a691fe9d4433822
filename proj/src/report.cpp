#include "cms/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "cms/errors.hpp"

namespace cms {

std::string csv_number(double v) { return fmt::format("{:.17g}", v); }

std::string csv_number(const std::optional<double>& v) { return v ? csv_number(*v) : std::string(); }

std::string CsvTable::str() const {
    std::string out;
    const auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

void CsvTable::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write {}", path));
    out << str();
    if (!out) throw Error(fmt::format("error writing {}", path));
}

namespace {

int subspace_count(const std::vector<AdaptTrace>& traces) {
    for (const auto& t : traces)
        if (!t.iterations.empty()) return static_cast<int>(t.iterations.front().m.m.size());
    return 0;
}

void append_m_header(std::vector<std::string>& h, int ns) {
    for (int s = 0; s < ns; ++s) h.push_back(fmt::format("m_{}", s));
}

std::vector<std::string> iteration_cells(int index, const AdaptIteration& it) {
    std::vector<std::string> row{std::to_string(index), std::to_string(it.dofs)};
    for (int v : it.m.m) row.push_back(std::to_string(v));
    row.push_back(csv_number(it.estimate));
    row.push_back(csv_number(it.error));
    row.push_back(csv_number(it.relative_estimate));
    row.push_back(csv_number(it.relative_error));
    row.push_back(csv_number(it.report.S.S));
    return row;
}

std::vector<std::string> iteration_header(int ns) {
    std::vector<std::string> h{"iteration", "dofs"};
    append_m_header(h, ns);
    for (const char* c : {"estimate", "error", "relative_estimate", "relative_error", "stability_factor"})
        h.emplace_back(c);
    return h;
}

}  // namespace

CsvTable trace_table(const AdaptTrace& trace) {
    CsvTable t;
    t.header = iteration_header(subspace_count({trace}));
    for (std::size_t i = 0; i < trace.iterations.size(); ++i)
        t.rows.push_back(iteration_cells(static_cast<int>(i + 1), trace.iterations[i]));
    return t;
}

CsvTable sweep_summary_table(const std::vector<AdaptTrace>& traces) {
    const int ns = subspace_count(traces);
    CsvTable t;
    t.header = {"omega2"};
    append_m_header(t.header, ns);
    for (const char* c : {"dofs", "iterations", "efficiency_index", "relative_true_error", "relative_estimate",
                          "stability_factor", "termination"})
        t.header.emplace_back(c);
    for (const auto& tr : traces) {
        std::vector<std::string> row{csv_number(tr.omega * tr.omega)};
        if (tr.iterations.empty()) {
            row.resize(t.header.size());
            row.back() = to_string(tr.termination);
            t.rows.push_back(row);
            continue;
        }
        const auto& last = tr.last();
        for (int v : last.m.m) row.push_back(std::to_string(v));
        row.push_back(std::to_string(last.dofs));
        row.push_back(std::to_string(tr.iterations.size()));
        row.push_back(csv_number(tr.efficiency_index()));
        row.push_back(csv_number(last.relative_error));
        row.push_back(csv_number(last.relative_estimate));
        row.push_back(csv_number(last.report.S.S));
        row.push_back(to_string(tr.termination));
        t.rows.push_back(row);
    }
    return t;
}

CsvTable sweep_trace_table(const std::vector<AdaptTrace>& traces) {
    CsvTable t;
    t.header = {"case", "omega2"};
    const auto h = iteration_header(subspace_count(traces));
    t.header.insert(t.header.end(), h.begin(), h.end());
    for (std::size_t c = 0; c < traces.size(); ++c)
        for (std::size_t i = 0; i < traces[c].iterations.size(); ++i) {
            std::vector<std::string> row{std::to_string(c), csv_number(traces[c].omega * traces[c].omega)};
            const auto cells = iteration_cells(static_cast<int>(i + 1), traces[c].iterations[i]);
            row.insert(row.end(), cells.begin(), cells.end());
            t.rows.push_back(row);
        }
    return t;
}

std::string convergence_svg(const AdaptTrace& trace) {
    if (trace.iterations.empty()) throw InvalidArgument("convergence plot of an empty trace");
    constexpr double W = 640, H = 420, left = 80, right = 20, top = 30, bottom = 60;
    const double pw = W - left - right, ph = H - top - bottom;

    double xmin = trace.iterations.front().dofs, xmax = xmin;
    double ymin = INFINITY, ymax = -INFINITY;
    const auto take = [&](double v) {
        if (v > 0.0 && std::isfinite(v)) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    };
    for (const auto& it : trace.iterations) {
        xmin = std::min<double>(xmin, it.dofs);
        xmax = std::max<double>(xmax, it.dofs);
        take(it.estimate);
        if (it.error) take(*it.error);
    }
    if (xmax == xmin) {
        xmin -= 1.0;
        xmax += 1.0;
    }
    if (!(ymin <= ymax)) ymin = ymax = 1.0;
    const int dlo = static_cast<int>(std::floor(std::log10(ymin)));
    int dhi = static_cast<int>(std::ceil(std::log10(ymax)));
    if (dhi == dlo) ++dhi;

    const auto X = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    const auto Y = [&](double y) { return top + ph - (std::log10(y) - dlo) / (dhi - dlo) * ph; };

    std::string s;
    s += fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
                     W, H, W, H);
    s += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", W, H);
    s += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"black\"/>\n",
                     left, top, pw, ph);
    for (int d = dlo; d <= dhi; ++d) {
        const double y = Y(std::pow(10.0, d));
        s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n", left, y,
                         left + pw, y);
        s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"12\" text-anchor=\"end\">1e{}</text>\n",
                         left - 6, y + 4, d);
    }
    constexpr int nxt = 5;
    for (int k = 0; k <= nxt; ++k) {
        const double v = xmin + (xmax - xmin) * k / nxt;
        const double x = X(v);
        s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"black\"/>\n", x,
                         top + ph, x, top + ph + 5);
        s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"12\" text-anchor=\"middle\">{:.4g}</text>\n", x,
                         top + ph + 20, v);
    }
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"13\" text-anchor=\"middle\">DOFs</text>\n",
                     left + pw / 2, H - 15);

    const auto series = [&](const char* name, const char* color, bool square, auto value) {
        std::string pts;
        std::string marks;
        for (const auto& it : trace.iterations) {
            const std::optional<double> v = value(it);
            if (!v || !(*v > 0.0) || !std::isfinite(*v)) continue;
            const double x = X(it.dofs), y = Y(*v);
            pts += fmt::format("{}{:.2f},{:.2f}", pts.empty() ? "" : " ", x, y);
            if (square)
                marks += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"8\" height=\"8\" fill=\"{}\"/>\n", x - 4,
                                     y - 4, color);
            else
                marks += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"{}\"/>\n", x, y, color);
        }
        if (pts.empty()) return;
        s += fmt::format("<g class=\"{}\">\n<polyline points=\"{}\" fill=\"none\" stroke=\"{}\"/>\n{}</g>\n", name, pts,
                         color, marks);
    };
    series("error", "#c0392b", true, [](const AdaptIteration& it) { return it.error; });
    series("estimate", "#2c3e80", false, [](const AdaptIteration& it) { return std::optional<double>(it.estimate); });

    s += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"8\" height=\"8\" fill=\"#c0392b\"/>\n", left + pw - 110,
                     top + 10);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"12\">error</text>\n", left + pw - 96, top + 18);
    s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"#2c3e80\"/>\n", left + pw - 106, top + 30);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"12\">estimate</text>\n", left + pw - 96, top + 34);
    s += "</svg>\n";
    return s;
}

void emit_convergence_plot(const AdaptTrace& trace, const std::string& path) {
    const std::string svg = convergence_svg(trace);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write {}", path));
    out << svg;
    if (!out) throw Error(fmt::format("error writing {}", path));
}

}  // namespace cms
