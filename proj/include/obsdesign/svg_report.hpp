#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "obsdesign/confidence_region.hpp"
#include "obsdesign/geometry.hpp"
#include "obsdesign/io.hpp"
#include "obsdesign/synthetic.hpp"

namespace obsdesign {

namespace svg {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// Fixed 600x600 viewport with a square data window [0, 0.27]^2.
struct Frame {
    double lo = 0.0;
    double hi = 0.27;
    double px(double v) const { return 70.0 + (v - lo) / (hi - lo) * 500.0; }
    double py(double v) const { return 540.0 - (v - lo) / (hi - lo) * 500.0; }
};

/// Sutherland-Hodgman clip of a polygon against the box [lo, hi]^2.
inline std::vector<Vec2> clip_polygon_box(std::vector<Vec2> poly, double lo, double hi) {
    struct Edge {
        int axis;
        double bound;
        bool keep_ge;
    };
    const Edge edges[4] = {{0, lo, true}, {0, hi, false}, {1, lo, true}, {1, hi, false}};
    for (const Edge& e : edges) {
        if (poly.empty()) break;
        auto coord = [&](Vec2 p) { return e.axis == 0 ? p.x : p.y; };
        auto inside = [&](Vec2 p) { return e.keep_ge ? coord(p) >= e.bound : coord(p) <= e.bound; };
        auto intersect = [&](Vec2 a, Vec2 b) {
            const double t = (e.bound - coord(a)) / (coord(b) - coord(a));
            return Vec2{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
        };
        std::vector<Vec2> out;
        out.reserve(poly.size() + 4);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const Vec2 cur = poly[i];
            const Vec2 prev = poly[(i + poly.size() - 1) % poly.size()];
            if (inside(cur)) {
                if (!inside(prev)) out.push_back(intersect(prev, cur));
                out.push_back(cur);
            } else if (inside(prev)) {
                out.push_back(intersect(prev, cur));
            }
        }
        poly = std::move(out);
    }
    return poly;
}

/// Ellipse boundary sampled as a closed polyline.
inline std::vector<Vec2> ellipse_polyline(const Ellipse& e, int segments = 256) {
    const EigenSym2 eg = eigen_sym2(e.shape);
    const double a = 1.0 / std::sqrt(eg.l1);
    const double b = 1.0 / std::sqrt(eg.l2);
    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(segments));
    for (int i = 0; i < segments; ++i) {
        const double th = 2.0 * 3.14159265358979323846 * i / segments;
        const double u = a * std::cos(th), v = b * std::sin(th);
        pts.push_back({e.center.x + eg.v1.x * u + eg.v2.x * v,
                       e.center.y + eg.v1.y * u + eg.v2.y * v});
    }
    return pts;
}

} // namespace svg

/// One stratum's confidence-region picture: bootstrap rectangles, the
/// clipped ellipse outline, the 0.25 hard bounds and the point estimate.
inline std::string region_svg(const NamedRegion& nr,
                              const std::vector<ReplicateRectangle>& rects) {
    const svg::Frame f;
    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" "
         "viewBox=\"0 0 600 600\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"600\" height=\"600\" fill=\"white\"/>\n";
    s += "<text x=\"300\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">stratum " + nr.stratum + "</text>\n";

    // Axes and ticks.
    s += "<line x1=\"" + svg::num(f.px(f.lo)) + "\" y1=\"" + svg::num(f.py(f.lo)) + "\" x2=\"" +
         svg::num(f.px(f.hi)) + "\" y2=\"" + svg::num(f.py(f.lo)) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    s += "<line x1=\"" + svg::num(f.px(f.lo)) + "\" y1=\"" + svg::num(f.py(f.lo)) + "\" x2=\"" +
         svg::num(f.px(f.lo)) + "\" y2=\"" + svg::num(f.py(f.hi)) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double v = 0.05 * i;
        s += "<line x1=\"" + svg::num(f.px(v)) + "\" y1=\"" + svg::num(f.py(f.lo)) + "\" x2=\"" +
             svg::num(f.px(v)) + "\" y2=\"" + svg::num(f.py(f.lo) + 5.0) +
             "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        s += "<text x=\"" + svg::num(f.px(v)) + "\" y=\"" + svg::num(f.py(f.lo) + 20.0) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
             svg::num(v) + "</text>\n";
        s += "<line x1=\"" + svg::num(f.px(f.lo) - 5.0) + "\" y1=\"" + svg::num(f.py(v)) +
             "\" x2=\"" + svg::num(f.px(f.lo)) + "\" y2=\"" + svg::num(f.py(v)) +
             "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        s += "<text x=\"" + svg::num(f.px(f.lo) - 10.0) + "\" y=\"" + svg::num(f.py(v) + 4.0) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + svg::num(v) +
             "</text>\n";
    }
    s += "<text x=\"320\" y=\"585\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">control variance</text>\n";
    s += "<text x=\"18\" y=\"300\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 18 300)\">treated variance</text>\n";

    // Hard upper bounds at 0.25.
    s += "<line x1=\"" + svg::num(f.px(0.25)) + "\" y1=\"" + svg::num(f.py(f.lo)) + "\" x2=\"" +
         svg::num(f.px(0.25)) + "\" y2=\"" + svg::num(f.py(f.hi)) +
         "\" stroke=\"gray\" stroke-width=\"1\" stroke-dasharray=\"3,3\"/>\n";
    s += "<line x1=\"" + svg::num(f.px(f.lo)) + "\" y1=\"" + svg::num(f.py(0.25)) + "\" x2=\"" +
         svg::num(f.px(f.hi)) + "\" y2=\"" + svg::num(f.py(0.25)) +
         "\" stroke=\"gray\" stroke-width=\"1\" stroke-dasharray=\"3,3\"/>\n";

    // Bootstrap rectangles.
    for (const auto& r : rects) {
        const double x = f.px(r.sigma0.var_lower);
        const double y = f.py(r.sigma1.var_upper);
        const double w = std::max(0.6, f.px(r.sigma0.var_upper) - f.px(r.sigma0.var_lower));
        const double h = std::max(0.6, f.py(r.sigma1.var_lower) - f.py(r.sigma1.var_upper));
        s += "<rect x=\"" + svg::num(x) + "\" y=\"" + svg::num(y) + "\" width=\"" + svg::num(w) +
             "\" height=\"" + svg::num(h) +
             "\" fill=\"#7b2d8b\" fill-opacity=\"0.06\" stroke=\"#7b2d8b\" "
             "stroke-opacity=\"0.35\" stroke-width=\"0.5\"/>\n";
    }

    // Region outline: ellipse boundary clipped to the box.
    const auto poly = svg::clip_polygon_box(svg::ellipse_polyline(nr.region.ellipse),
                                            nr.region.box_lo, nr.region.box_hi);
    if (!poly.empty()) {
        std::string d = "M";
        for (std::size_t i = 0; i < poly.size(); ++i) {
            d += " " + svg::num(f.px(poly[i].x)) + " " + svg::num(f.py(poly[i].y));
            if (i == 0) d += " L";
        }
        d += " Z";
        s += "<path d=\"" + d +
             "\" fill=\"#2166ac\" fill-opacity=\"0.10\" stroke=\"#2166ac\" "
             "stroke-width=\"1.5\"/>\n";
    }

    // Point estimate.
    s += "<circle cx=\"" + svg::num(f.px(nr.point_estimate.x)) + "\" cy=\"" +
         svg::num(f.py(nr.point_estimate.y)) + "\" r=\"4\" fill=\"black\"/>\n";

    s += "</svg>\n";
    return s;
}

/// Bar chart of average losses by design (and gamma for regret_min rows).
inline std::string loss_bars_svg(const BenchmarkReport& rep) {
    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" "
         "viewBox=\"0 0 600 600\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"600\" height=\"600\" fill=\"white\"/>\n";
    s += "<text x=\"300\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">average loss by design</text>\n";

    double max_loss = 0.0;
    for (const auto& r : rep.rows) max_loss = std::max(max_loss, r.avg_loss);
    if (max_loss <= 0.0) max_loss = 1.0;

    const double left = 60.0, bottom = 520.0, top = 60.0;
    const double plot_w = 520.0, plot_h = bottom - top;
    const std::size_t n = rep.rows.size();
    const double slot = plot_w / static_cast<double>(n);
    const double bar_w = slot * 0.7;

    s += "<line x1=\"" + svg::num(left) + "\" y1=\"" + svg::num(bottom) + "\" x2=\"" +
         svg::num(left + plot_w) + "\" y2=\"" + svg::num(bottom) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";

    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = rep.rows[i];
        const double h = plot_h * row.avg_loss / max_loss;
        const double x = left + slot * static_cast<double>(i) + (slot - bar_w) / 2.0;
        const std::string color = row.design == "regret_min" ? "#2166ac" : "#999999";
        s += "<rect x=\"" + svg::num(x) + "\" y=\"" + svg::num(bottom - h) + "\" width=\"" +
             svg::num(bar_w) + "\" height=\"" + svg::num(h) + "\" fill=\"" + color + "\"/>\n";
        s += "<text x=\"" + svg::num(x + bar_w / 2.0) + "\" y=\"" + svg::num(bottom - h - 6.0) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
             svg::sci(row.avg_loss) + "</text>\n";
        std::string label = row.design;
        if (!std::isnan(row.gamma)) label += " @" + svg::sci(row.gamma);
        s += "<text x=\"" + svg::num(x + bar_w / 2.0) + "\" y=\"" + svg::num(bottom + 16.0) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + label +
             "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

inline std::string report_index_html(const std::vector<std::string>& files) {
    std::string s = "<!DOCTYPE html>\n<html>\n<head><title>obsdesign report</title></head>\n<body>\n";
    s += "<h1>obsdesign report</h1>\n<ul>\n";
    for (const auto& f : files) s += "<li><a href=\"" + f + "\">" + f + "</a></li>\n";
    s += "</ul>\n</body>\n</html>\n";
    return s;
}

} // namespace obsdesign
