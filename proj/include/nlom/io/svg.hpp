// Copyright 2026 The nlom Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal SVG figures: stacked line-plot panels and heatmaps. Output is a
// pure function of the inputs, so figures are byte-reproducible.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlom::io {

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '\'': out += "&apos;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string svg_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[32];
    if (v != 0.0 && (std::abs(v) < 1e-3 || std::abs(v) >= 1e5)) {
        std::snprintf(buf, sizeof buf, "%.0e", v);
    } else {
        std::snprintf(buf, sizeof buf, "%.4g", v);
    }
    return buf;
}

struct Series {
    std::string name;
    std::vector<double> x, y;
    std::string color = "#1f77b4";
    bool dashed = false;
    bool markers = false;
};

struct ReferenceLine {
    double value = 0.0;
    bool vertical = false;
    std::string color = "#555555";
    std::string label;
};

struct Panel {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<Series> series;
    std::vector<ReferenceLine> references;
};

namespace detail {

struct Axis {
    double lo = 0.0, hi = 1.0;
    bool log = false;

    double map(double v, double a, double b) const {
        const double t = log ? (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo)) : (v - lo) / (hi - lo);
        return a + t * (b - a);
    }

    std::vector<double> ticks() const {
        std::vector<double> t;
        if (log) {
            for (double e = std::floor(std::log10(lo)); e <= std::ceil(std::log10(hi)); e += 1.0) {
                const double v = std::pow(10.0, e);
                if (v >= lo * (1 - 1e-12) && v <= hi * (1 + 1e-12)) t.push_back(v);
            }
            if (t.size() < 2) t = {lo, hi};
            return t;
        }
        const double span = hi - lo;
        const double raw = span / 5.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        double step = mag;
        for (double m : {1.0, 2.0, 5.0, 10.0}) {
            if (m * mag >= raw) {
                step = m * mag;
                break;
            }
        }
        for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
        return t;
    }
};

inline Axis fit_axis(const std::vector<const std::vector<double>*>& data, const std::vector<double>& extra, bool log) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    auto take = [&](double v) {
        if (!std::isfinite(v) || (log && !(v > 0.0))) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    };
    for (const auto* d : data) {
        for (double v : *d) take(v);
    }
    for (double v : extra) take(v);
    if (!std::isfinite(lo)) {
        lo = log ? 0.1 : 0.0;
        hi = log ? 10.0 : 1.0;
    }
    if (!(hi > lo)) {
        const double pad = log ? 0.0 : std::max(1e-12, std::abs(lo) * 0.1);
        if (log) {
            lo /= 2.0;
            hi *= 2.0;
        } else {
            lo -= pad;
            hi += pad;
        }
    } else if (!log) {
        const double pad = 0.04 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
    return {lo, hi, log};
}

}  // namespace detail

/// Panels stacked vertically, each with its own axes.
inline std::string render_panels(const std::vector<Panel>& panels, const std::string& metadata = {}, double width = 720,
                                 double panel_height = 300) {
    if (panels.empty()) throw std::invalid_argument("render_panels: no panels");
    const double ml = 80, mr = 150, mt = 34, mb = 50;
    const double height = panel_height * static_cast<double>(panels.size());
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg_number(width) << "\" height=\"" << svg_number(height)
      << "\" viewBox=\"0 0 " << svg_number(width) << ' ' << svg_number(height)
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    if (!metadata.empty()) s << "<metadata>" << xml_escape(metadata) << "</metadata>\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const Panel& p = panels[pi];
        const double top = panel_height * static_cast<double>(pi) + mt;
        const double bottom = panel_height * static_cast<double>(pi + 1) - mb;
        const double left = ml, right = width - mr;
        std::vector<const std::vector<double>*> xs, ys;
        for (const auto& se : p.series) {
            xs.push_back(&se.x);
            ys.push_back(&se.y);
        }
        std::vector<double> rx, ry;
        for (const auto& r : p.references) (r.vertical ? rx : ry).push_back(r.value);
        const auto ax = detail::fit_axis(xs, rx, p.log_x);
        const auto ay = detail::fit_axis(ys, ry, p.log_y);
        s << "<g>\n";
        s << "<text x=\"" << svg_number((left + right) / 2) << "\" y=\"" << svg_number(top - 12)
          << "\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(p.title) << "</text>\n";
        s << "<rect x=\"" << svg_number(left) << "\" y=\"" << svg_number(top) << "\" width=\"" << svg_number(right - left)
          << "\" height=\"" << svg_number(bottom - top) << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (double t : ax.ticks()) {
            const double x = ax.map(t, left, right);
            s << "<line x1=\"" << svg_number(x) << "\" y1=\"" << svg_number(bottom) << "\" x2=\"" << svg_number(x)
              << "\" y2=\"" << svg_number(bottom + 5) << "\" stroke=\"black\"/>";
            s << "<text x=\"" << svg_number(x) << "\" y=\"" << svg_number(bottom + 18) << "\" text-anchor=\"middle\">"
              << tick_label(t) << "</text>\n";
        }
        for (double t : ay.ticks()) {
            const double y = ay.map(t, bottom, top);
            s << "<line x1=\"" << svg_number(left - 5) << "\" y1=\"" << svg_number(y) << "\" x2=\"" << svg_number(left)
              << "\" y2=\"" << svg_number(y) << "\" stroke=\"black\"/>";
            s << "<text x=\"" << svg_number(left - 8) << "\" y=\"" << svg_number(y + 4) << "\" text-anchor=\"end\">"
              << tick_label(t) << "</text>\n";
        }
        s << "<text x=\"" << svg_number((left + right) / 2) << "\" y=\"" << svg_number(bottom + 38)
          << "\" text-anchor=\"middle\">" << xml_escape(p.x_label) << "</text>\n";
        s << "<text transform=\"translate(" << svg_number(left - 60) << ' ' << svg_number((top + bottom) / 2)
          << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(p.y_label) << "</text>\n";
        for (const auto& r : p.references) {
            if (r.vertical) {
                const double x = ax.map(r.value, left, right);
                s << "<line x1=\"" << svg_number(x) << "\" y1=\"" << svg_number(top) << "\" x2=\"" << svg_number(x)
                  << "\" y2=\"" << svg_number(bottom) << "\" stroke=\"" << r.color << "\" stroke-dasharray=\"2 3\"/>\n";
            } else {
                const double y = ay.map(r.value, bottom, top);
                s << "<line x1=\"" << svg_number(left) << "\" y1=\"" << svg_number(y) << "\" x2=\"" << svg_number(right)
                  << "\" y2=\"" << svg_number(y) << "\" stroke=\"" << r.color << "\" stroke-dasharray=\"2 3\"/>\n";
            }
        }
        s << "<clipPath id=\"clip" << pi << "\"><rect x=\"" << svg_number(left) << "\" y=\"" << svg_number(top)
          << "\" width=\"" << svg_number(right - left) << "\" height=\"" << svg_number(bottom - top) << "\"/></clipPath>\n";
        double legend_y = top + 10;
        for (const auto& se : p.series) {
            s << "<polyline clip-path=\"url(#clip" << pi << ")\" fill=\"none\" stroke=\"" << se.color
              << "\" stroke-width=\"1.3\"" << (se.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
            const std::size_t n = std::min(se.x.size(), se.y.size());
            bool first = true;
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(se.x[i]) || !std::isfinite(se.y[i])) continue;
                if ((p.log_x && !(se.x[i] > 0)) || (p.log_y && !(se.y[i] > 0))) continue;
                if (!first) s << ' ';
                first = false;
                s << svg_number(ax.map(se.x[i], left, right)) << ',' << svg_number(ay.map(se.y[i], bottom, top));
            }
            s << "\"/>\n";
            if (se.markers) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (!std::isfinite(se.x[i]) || !std::isfinite(se.y[i])) continue;
                    s << "<circle cx=\"" << svg_number(ax.map(se.x[i], left, right)) << "\" cy=\""
                      << svg_number(ay.map(se.y[i], bottom, top)) << "\" r=\"2\" fill=\"" << se.color << "\"/>";
                }
                s << '\n';
            }
            if (!se.name.empty()) {
                s << "<line x1=\"" << svg_number(right + 10) << "\" y1=\"" << svg_number(legend_y) << "\" x2=\""
                  << svg_number(right + 30) << "\" y2=\"" << svg_number(legend_y) << "\" stroke=\"" << se.color
                  << "\" stroke-width=\"2\"" << (se.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>";
                s << "<text x=\"" << svg_number(right + 35) << "\" y=\"" << svg_number(legend_y + 4) << "\">"
                  << xml_escape(se.name) << "</text>\n";
                legend_y += 18;
            }
        }
        s << "</g>\n";
    }
    s << "</svg>\n";
    return s.str();
}

/// White to dark red, t in [0, 1].
inline std::string heat_color(double t) {
    t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
    // Piecewise linear through white, light red, red and dark red.
    const double stops[4][4] = {{0.0, 255, 255, 255}, {0.35, 252, 146, 114}, {0.7, 203, 24, 29}, {1.0, 103, 0, 13}};
    int k = 0;
    while (k < 2 && t > stops[k + 1][0]) ++k;
    const double u = (t - stops[k][0]) / (stops[k + 1][0] - stops[k][0]);
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(stops[k][1] + u * (stops[k + 1][1] - stops[k][1]))),
                  static_cast<int>(std::lround(stops[k][2] + u * (stops[k + 1][2] - stops[k][2]))),
                  static_cast<int>(std::lround(stops[k][3] + u * (stops[k + 1][3] - stops[k][3]))));
    return buf;
}

struct Heatmap {
    std::string title, x_label, y_label;
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    std::size_t nx = 1, ny = 1;
    /// Row-major values[i * ny + j], i along x.
    std::vector<double> values;
};

/// Cells colored relative to the maximum value. Very fine grids are
/// block-averaged down to at most `max_cells` per axis.
inline std::string render_heatmap(const Heatmap& h, const std::string& metadata = {}, std::size_t max_cells = 200) {
    if (h.values.size() != h.nx * h.ny || h.nx == 0 || h.ny == 0) throw std::invalid_argument("render_heatmap: bad grid");
    const std::size_t bx = (h.nx + max_cells - 1) / max_cells, by = (h.ny + max_cells - 1) / max_cells;
    const std::size_t cx = (h.nx + bx - 1) / bx, cy = (h.ny + by - 1) / by;
    std::vector<double> cells(cx * cy, 0.0);
    for (std::size_t i = 0; i < h.nx; ++i) {
        for (std::size_t j = 0; j < h.ny; ++j) cells[(i / bx) * cy + j / by] += h.values[i * h.ny + j];
    }
    double peak = 0.0;
    for (double v : cells) peak = std::max(peak, v);
    const double size = 520, ml = 80, mt = 40, mb = 60, mr = 40;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg_number(ml + size + mr) << "\" height=\""
      << svg_number(mt + size + mb) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    if (!metadata.empty()) s << "<metadata>" << xml_escape(metadata) << "</metadata>\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << svg_number(ml + size / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
      << xml_escape(h.title) << "</text>\n";
    const double w = size / static_cast<double>(cx), ht = size / static_cast<double>(cy);
    for (std::size_t i = 0; i < cx; ++i) {
        for (std::size_t j = 0; j < cy; ++j) {
            const double v = cells[i * cy + j];
            if (!(v > 0.0)) continue;
            s << "<rect x=\"" << svg_number(ml + w * static_cast<double>(i)) << "\" y=\""
              << svg_number(mt + size - ht * static_cast<double>(j + 1)) << "\" width=\"" << svg_number(w + 0.3)
              << "\" height=\"" << svg_number(ht + 0.3) << "\" fill=\"" << heat_color(peak > 0 ? v / peak : 0.0) << "\"/>";
        }
    }
    s << "\n<rect x=\"" << svg_number(ml) << "\" y=\"" << svg_number(mt) << "\" width=\"" << svg_number(size)
      << "\" height=\"" << svg_number(size) << "\" fill=\"none\" stroke=\"black\"/>\n";
    const detail::Axis ax{h.x_min, h.x_max, false}, ay{h.y_min, h.y_max, false};
    for (double t : ax.ticks()) {
        const double x = ax.map(t, ml, ml + size);
        s << "<text x=\"" << svg_number(x) << "\" y=\"" << svg_number(mt + size + 18) << "\" text-anchor=\"middle\">"
          << tick_label(t) << "</text>";
    }
    for (double t : ay.ticks()) {
        const double y = ay.map(t, mt + size, mt);
        s << "<text x=\"" << svg_number(ml - 8) << "\" y=\"" << svg_number(y + 4) << "\" text-anchor=\"end\">"
          << tick_label(t) << "</text>";
    }
    s << "\n<text x=\"" << svg_number(ml + size / 2) << "\" y=\"" << svg_number(mt + size + 42)
      << "\" text-anchor=\"middle\">" << xml_escape(h.x_label) << "</text>\n";
    s << "<text transform=\"translate(" << svg_number(ml - 55) << ' ' << svg_number(mt + size / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(h.y_label) << "</text>\n";
    s << "</svg>\n";
    return s.str();
}

}  // namespace nlom::io
