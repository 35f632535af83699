#pragma once

// Static SVG line and scatter plots drawn from CSV columns.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rlnn/bench/csv.hpp"

namespace rlnn::bench {

struct PlotSpec {
    std::string title;
    std::string x;
    std::string y;
    std::string group;  // one series per distinct value; empty for a single series
    std::vector<std::pair<std::string, std::string>> filter;  // keep rows with column == value
    bool log_x = false;
    bool log_abs_y = false;  // plot log10 |y|
    bool scatter = false;
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string tick_label(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

}  // namespace detail

inline void write_svg_plot(const CsvTable& table, const PlotSpec& spec, const std::string& path) {
    const auto xi = table.column(spec.x);
    const auto yi = table.column(spec.y);
    std::map<std::string, std::vector<std::pair<double, double>>> series;
    for (const auto& row : table.rows) {
        bool keep = true;
        for (const auto& [col, value] : spec.filter) keep = keep && row[table.column(col)] == value;
        if (!keep) continue;
        double x = std::stod(row[xi]);
        double y = std::stod(row[yi]);
        if (spec.log_x) {
            if (!(x > 0.0)) continue;
            x = std::log10(x);
        }
        if (spec.log_abs_y) {
            if (y == 0.0) continue;
            y = std::log10(std::abs(y));
        }
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        series[spec.group.empty() ? spec.y : row[table.column(spec.group)]].emplace_back(x, y);
    }

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& [_, pts] : series)
        for (const auto& [x, y] : pts) {
            x0 = std::min(x0, x), x1 = std::max(x1, x);
            y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
    if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;

    constexpr double width = 720, height = 440, left = 80, right = 170, top = 40, bottom = 60;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (width - left - right); };
    auto py = [&](double y) { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << width << R"(" height=")" << height
        << R"(" font-family="sans-serif" font-size="12">)" << '\n';
    out << R"(<rect width="100%" height="100%" fill="white"/>)" << '\n';
    out << R"(<text x=")" << width / 2 << R"(" y="22" text-anchor="middle" font-size="15">)"
        << detail::svg_escape(spec.title) << "</text>\n";
    out << R"(<line x1=")" << left << R"(" y1=")" << height - bottom << R"(" x2=")" << width - right << R"(" y2=")"
        << height - bottom << R"(" stroke="black"/>)" << '\n';
    out << R"(<line x1=")" << left << R"(" y1=")" << top << R"(" x2=")" << left << R"(" y2=")" << height - bottom
        << R"(" stroke="black"/>)" << '\n';
    for (int k = 0; k <= 5; ++k) {
        const double xv = x0 + (x1 - x0) * k / 5.0;
        const double yv = y0 + (y1 - y0) * k / 5.0;
        const double xl = spec.log_x ? std::pow(10.0, xv) : xv;
        const double yl = spec.log_abs_y ? std::pow(10.0, yv) : yv;
        out << R"(<text x=")" << px(xv) << R"(" y=")" << height - bottom + 18 << R"(" text-anchor="middle">)"
            << detail::tick_label(xl) << "</text>\n";
        out << R"(<text x=")" << left - 6 << R"(" y=")" << py(yv) + 4 << R"(" text-anchor="end">)"
            << detail::tick_label(yl) << "</text>\n";
    }
    out << R"(<text x=")" << (left + width - right) / 2 << R"(" y=")" << height - 18 << R"(" text-anchor="middle">)"
        << detail::svg_escape(spec.x + (spec.log_x ? " (log)" : "")) << "</text>\n";
    out << "<text transform=\"translate(18," << (top + height - bottom) / 2
        << R"x() rotate(-90)" text-anchor="middle">)x"
        << detail::svg_escape(spec.log_abs_y ? "|" + spec.y + "| (log)" : spec.y) << "</text>\n";

    std::size_t idx = 0;
    for (auto& [name, pts] : series) {
        const char* colour = palette[idx % std::size(palette)];
        if (spec.scatter) {
            for (const auto& [x, y] : pts)
                out << R"(<circle cx=")" << px(x) << R"(" cy=")" << py(y) << R"(" r="1.5" fill=")" << colour
                    << R"(" fill-opacity="0.5"/>)" << '\n';
        } else {
            std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            out << R"(<polyline fill="none" stroke=")" << colour << R"(" stroke-width="1.5" points=")";
            for (const auto& [x, y] : pts) out << px(x) << ',' << py(y) << ' ';
            out << "\"/>\n";
        }
        const double ly = top + 16.0 * static_cast<double>(idx);
        out << R"(<rect x=")" << width - right + 12 << R"(" y=")" << ly << R"(" width="10" height="10" fill=")"
            << colour << R"("/>)" << '\n';
        out << R"(<text x=")" << width - right + 28 << R"(" y=")" << ly + 9 << "\">" << detail::svg_escape(name)
            << "</text>\n";
        ++idx;
    }
    out << "</svg>\n";
}

inline void plot_csv(const std::string& csv_path, const PlotSpec& spec, const std::string& svg_path) {
    write_svg_plot(read_csv(csv_path), spec, svg_path);
}

}  // namespace rlnn::bench
