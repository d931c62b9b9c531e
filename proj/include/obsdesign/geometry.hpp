#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "obsdesign/errors.hpp"

namespace obsdesign {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm2(Vec2 a) { return dot(a, a); }
inline double cross(Vec2 o, Vec2 a, Vec2 b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Symmetric 2x2 matrix.
struct Sym2 {
    double xx = 1.0;
    double xy = 0.0;
    double yy = 1.0;

    double det() const { return xx * yy - xy * xy; }

    Sym2 inverse() const {
        const double d = det();
        if (!(std::abs(d) > 0.0)) throw NumericalError("singular 2x2 matrix");
        return {yy / d, -xy / d, xx / d};
    }

    Vec2 mul(Vec2 v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }

    double quad(Vec2 v) const { return v.x * (xx * v.x + xy * v.y) + v.y * (xy * v.x + yy * v.y); }
};

// Eigen decomposition of a symmetric 2x2 matrix; l1 >= l2, v1/v2 orthonormal.
struct EigenSym2 {
    double l1 = 0.0;
    double l2 = 0.0;
    Vec2 v1{1.0, 0.0};
    Vec2 v2{0.0, 1.0};
};

inline EigenSym2 eigen_sym2(const Sym2& m) {
    EigenSym2 e;
    const double tr = m.xx + m.yy;
    const double disc = std::hypot(m.xx - m.yy, 2.0 * m.xy);
    e.l1 = 0.5 * (tr + disc);
    e.l2 = 0.5 * (tr - disc);
    if (std::abs(m.xy) < 1e-300 * std::max(1.0, std::abs(tr))) {
        if (m.xx >= m.yy) {
            e.v1 = {1.0, 0.0};
            e.v2 = {0.0, 1.0};
        } else {
            e.v1 = {0.0, 1.0};
            e.v2 = {-1.0, 0.0};
        }
        return e;
    }
    Vec2 a{e.l1 - m.yy, m.xy};
    Vec2 b{m.xy, e.l1 - m.xx};
    Vec2 v = norm2(a) >= norm2(b) ? a : b;
    const double n = std::sqrt(norm2(v));
    e.v1 = {v.x / n, v.y / n};
    e.v2 = {-e.v1.y, e.v1.x};
    return e;
}

// Ellipse {x : (x - c)' M (x - c) <= 1} with M symmetric positive definite.
struct Ellipse {
    Vec2 center;
    Sym2 shape;
};

inline double mahalanobis2(const Ellipse& e, Vec2 p) { return e.shape.quad(p - e.center); }

/// Convex hull (Andrew monotone chain), counterclockwise, collinear points
/// dropped. Returns fewer than 3 points for degenerate inputs.
inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;
    std::vector<Vec2> h(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

namespace detail {

// Symmetric 3x3 matrix in packed form for the lifted Khachiyan iteration.
struct Sym3 {
    double a00 = 0, a01 = 0, a02 = 0, a11 = 0, a12 = 0, a22 = 0;
};

// Inverse via adjugate; returns false when numerically singular.
inline bool invert_sym3(const Sym3& m, Sym3& out) {
    const double c00 = m.a11 * m.a22 - m.a12 * m.a12;
    const double c01 = m.a12 * m.a02 - m.a01 * m.a22;
    const double c02 = m.a01 * m.a12 - m.a11 * m.a02;
    const double det = m.a00 * c00 + m.a01 * c01 + m.a02 * c02;
    if (!(std::abs(det) > 1e-30)) return false;
    const double c11 = m.a00 * m.a22 - m.a02 * m.a02;
    const double c12 = m.a01 * m.a02 - m.a00 * m.a12;
    const double c22 = m.a00 * m.a11 - m.a01 * m.a01;
    out = {c00 / det, c01 / det, c02 / det, c11 / det, c12 / det, c22 / det};
    return true;
}

inline double quad_sym3(const Sym3& m, double x, double y, double z) {
    return x * (m.a00 * x + m.a01 * y + m.a02 * z) + y * (m.a01 * x + m.a11 * y + m.a12 * z) +
           z * (m.a02 * x + m.a12 * y + m.a22 * z);
}

inline Ellipse fallback_circle(std::span<const Vec2> pts) {
    Vec2 c{0.0, 0.0};
    for (const Vec2& p : pts) c = c + p;
    c = c * (1.0 / static_cast<double>(pts.size()));
    double maxd = 0.0;
    for (const Vec2& p : pts) maxd = std::max(maxd, std::sqrt(norm2(p - c)));
    const double r = std::max(1e-6, maxd * (1.0 + 1e-9));
    return {c, {1.0 / (r * r), 0.0, 1.0 / (r * r)}};
}

} // namespace detail

/// Minimum-volume enclosing ellipse via the lifted Khachiyan barycentric
/// ascent with Wolfe-Atwood away steps, run on the convex hull in centered
/// and scaled coordinates. The result is rescaled so every input point has
/// Mahalanobis radius <= 1. Degenerate clouds (single point, collinear)
/// fall back to a circle around the centroid covering the data spread.
inline Ellipse min_volume_ellipse(std::span<const Vec2> pts, double tol) {
    if (pts.empty()) throw ValidationError("min_volume_ellipse: no points");
    if (tol <= 0.0) throw ValidationError("min_volume_ellipse: tol must be positive");

    Vec2 mu{0.0, 0.0};
    for (const Vec2& p : pts) mu = mu + p;
    mu = mu * (1.0 / static_cast<double>(pts.size()));
    double spread = 0.0;
    for (const Vec2& p : pts)
        spread = std::max({spread, std::abs(p.x - mu.x), std::abs(p.y - mu.y)});
    if (spread < 1e-12) return detail::fallback_circle(pts);

    std::vector<Vec2> scaled;
    scaled.reserve(pts.size());
    for (const Vec2& p : pts) scaled.push_back({(p.x - mu.x) / spread, (p.y - mu.y) / spread});

    std::vector<Vec2> hull = convex_hull(scaled);
    if (hull.size() < 3) return detail::fallback_circle(pts);

    const std::size_t m = hull.size();
    std::vector<double> u(m, 1.0 / static_cast<double>(m));
    std::vector<double> w(m);

    const int max_iters = 200000;
    for (int iter = 0; iter < max_iters; ++iter) {
        detail::Sym3 x{};
        for (std::size_t i = 0; i < m; ++i) {
            const double ui = u[i];
            const Vec2 p = hull[i];
            x.a00 += ui * p.x * p.x;
            x.a01 += ui * p.x * p.y;
            x.a02 += ui * p.x;
            x.a11 += ui * p.y * p.y;
            x.a12 += ui * p.y;
            x.a22 += ui;
        }
        detail::Sym3 xinv;
        if (!detail::invert_sym3(x, xinv)) return detail::fallback_circle(pts);

        std::size_t jp = 0, jm = m;
        double wmax = -1.0, wmin = 4.0;
        for (std::size_t i = 0; i < m; ++i) {
            w[i] = detail::quad_sym3(xinv, hull[i].x, hull[i].y, 1.0);
            if (w[i] > wmax) {
                wmax = w[i];
                jp = i;
            }
            if (u[i] > 1e-14 && w[i] < wmin) {
                wmin = w[i];
                jm = i;
            }
        }
        const double e_add = wmax - 3.0;
        const double e_away = jm < m ? 3.0 - wmin : 0.0;
        if (std::max(e_add, e_away) <= 3.0 * tol) break;

        double lam;
        std::size_t j;
        if (e_add >= e_away) {
            j = jp;
            lam = (wmax - 3.0) / (3.0 * (wmax - 1.0));
        } else {
            j = jm;
            if (u[j] >= 1.0 - 1e-14) break;
            const double lam_min = -u[j] / (1.0 - u[j]);
            // The stationary point of the coordinate update is valid only for
            // leverage > 1; below that the step is a full drop of the point.
            lam = wmin > 1.0 + 1e-14
                      ? std::max((wmin - 3.0) / (3.0 * (wmin - 1.0)), lam_min)
                      : lam_min;
        }
        for (std::size_t i = 0; i < m; ++i) u[i] *= (1.0 - lam);
        u[j] += lam;
    }

    Vec2 c{0.0, 0.0};
    for (std::size_t i = 0; i < m; ++i) c = c + hull[i] * u[i];
    Sym2 s{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2 d = hull[i] - c;
        s.xx += u[i] * d.x * d.x;
        s.xy += u[i] * d.x * d.y;
        s.yy += u[i] * d.y * d.y;
    }
    if (s.det() <= 1e-12 * std::max(1.0, s.xx + s.yy) * std::max(1.0, s.xx + s.yy))
        return detail::fallback_circle(pts);

    const Sym2 sinv = s.inverse();
    Sym2 shape{sinv.xx / 2.0, sinv.xy / 2.0, sinv.yy / 2.0};

    double r2max = 0.0;
    for (const Vec2& p : scaled) r2max = std::max(r2max, shape.quad(p - c));
    if (r2max > 0.0) {
        shape.xx /= r2max;
        shape.xy /= r2max;
        shape.yy /= r2max;
    }

    Ellipse out;
    out.center = {mu.x + spread * c.x, mu.y + spread * c.y};
    out.shape = {shape.xx / (spread * spread), shape.xy / (spread * spread),
                 shape.yy / (spread * spread)};
    return out;
}

/// Euclidean projection onto a solid ellipse. Interior points map to
/// themselves; otherwise the Lagrange multiplier of the KKT system is
/// located by bracketed Newton iteration on a scalar equation.
inline Vec2 project_to_ellipse(const Ellipse& e, Vec2 y) {
    if (mahalanobis2(e, y) <= 1.0) return y;
    const EigenSym2 eg = eigen_sym2(e.shape);
    if (!(eg.l2 > 0.0)) throw NumericalError("project_to_ellipse: shape not positive definite");
    const Vec2 d = y - e.center;
    const double z1 = dot(eg.v1, d);
    const double z2 = dot(eg.v2, d);

    auto phi = [&](double lam) {
        const double t1 = 1.0 + lam * eg.l1;
        const double t2 = 1.0 + lam * eg.l2;
        return eg.l1 * z1 * z1 / (t1 * t1) + eg.l2 * z2 * z2 / (t2 * t2) - 1.0;
    };
    auto dphi = [&](double lam) {
        const double t1 = 1.0 + lam * eg.l1;
        const double t2 = 1.0 + lam * eg.l2;
        return -2.0 * (eg.l1 * eg.l1 * z1 * z1 / (t1 * t1 * t1) +
                       eg.l2 * eg.l2 * z2 * z2 / (t2 * t2 * t2));
    };

    double lo = 0.0, hi = 1e-18;
    int guard = 0;
    while (phi(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 300) throw NumericalError("project_to_ellipse: bracket expansion failed");
    }

    double lam = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = phi(lam);
        if (std::abs(f) <= 1e-12) break;
        if (f > 0.0)
            lo = lam;
        else
            hi = lam;
        const double g = dphi(lam);
        double next = g < 0.0 ? lam - f / g : lo;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= 1e-16 * (1.0 + hi)) {
            lam = 0.5 * (lo + hi);
            break;
        }
        lam = next;
    }

    const double xi1 = z1 / (1.0 + lam * eg.l1);
    const double xi2 = z2 / (1.0 + lam * eg.l2);
    return {e.center.x + eg.v1.x * xi1 + eg.v2.x * xi2,
            e.center.y + eg.v1.y * xi1 + eg.v2.y * xi2};
}

/// Projection onto the axis-aligned box [lo, hi]^2.
inline Vec2 project_to_box(Vec2 p, double lo, double hi) {
    return {std::clamp(p.x, lo, hi), std::clamp(p.y, lo, hi)};
}

} // namespace obsdesign
