#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "obsdesign/data_model.hpp"
#include "obsdesign/geometry.hpp"
#include "obsdesign/parallel.hpp"
#include "obsdesign/rng.hpp"
#include "obsdesign/sipw.hpp"
#include "obsdesign/variance_map.hpp"

namespace obsdesign {

// One bootstrap replicate as a rectangle in the (sigma^2(0), sigma^2(1))
// plane.
struct ReplicateRectangle {
    VarBounds sigma0;
    VarBounds sigma1;

    std::array<Vec2, 4> vertices() const {
        return {Vec2{sigma0.var_lower, sigma1.var_lower}, Vec2{sigma0.var_lower, sigma1.var_upper},
                Vec2{sigma0.var_upper, sigma1.var_lower}, Vec2{sigma0.var_upper, sigma1.var_upper}};
    }
};

// Confidence region for (sigma^2(0), sigma^2(1)): ellipse intersected with
// the box [box_lo, box_hi]^2.
struct VarianceRegion {
    Ellipse ellipse;
    double box_lo = 1e-8;
    double box_hi = 0.25;

    bool contains(Vec2 p, double tol = 1e-9) const {
        if (p.x < box_lo - 1e-12 || p.x > box_hi + 1e-12) return false;
        if (p.y < box_lo - 1e-12 || p.y > box_hi + 1e-12) return false;
        return mahalanobis2(ellipse, p) <= 1.0 + tol;
    }
};

/// Bootstrap rectangles for one stratum. Replicate b draws from a stream
/// derived from (seed, stratum_id, b), so results do not depend on the
/// order in which replicates are evaluated. Resamples missing an arm are
/// redrawn from the same stream, capped at 1000 attempts.
inline std::vector<ReplicateRectangle> bootstrap_rectangles(const StratumSample& sample,
                                                            double gamma, int B,
                                                            std::uint64_t seed) {
    if (B < 1) throw ValidationError("bootstrap_rectangles: B must be >= 1");
    if (sample.units.empty()) throw ValidationError("bootstrap_rectangles: empty sample");

    const auto pw = PreparedWeights::from(sample, gamma);
    const std::size_t n = sample.units.size();
    std::vector<ReplicateRectangle> rects(static_cast<std::size_t>(B));

    std::vector<std::uint32_t> idx(n);
    for (int b = 0; b < B; ++b) {
        Rng rng = stream_for(seed, sample.stratum_id, static_cast<std::uint64_t>(b));
        bool ok = false;
        for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
            bool any_t = false, any_c = false;
            for (std::size_t i = 0; i < n; ++i) {
                idx[i] = static_cast<std::uint32_t>(rng.below(n));
                (pw.treated[idx[i]] ? any_t : any_c) = true;
            }
            if (!(any_t && any_c)) continue;
            const MeanBounds m1 = mean_extrema_indexed(pw, idx, Arm::Treated);
            const MeanBounds m0 = mean_extrema_indexed(pw, idx, Arm::Control);
            rects[static_cast<std::size_t>(b)] = {variance_bounds(m0), variance_bounds(m1)};
            ok = true;
        }
        if (!ok)
            throw NumericalError("bootstrap_rectangles: stratum '" + sample.stratum_id +
                                 "' produced single-arm resamples 1000 times");
    }
    return rects;
}

/// Scales the ellipse about its center so that its boundary passes through
/// the ceil((1-alpha)B)-th smallest of the per-rectangle max vertex radii;
/// exactly that many rectangles remain fully contained (ties by replicate
/// index).
inline Ellipse shrink_to_coverage(const Ellipse& ellipse,
                                  const std::vector<ReplicateRectangle>& rects, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)");
    if (rects.empty()) throw ValidationError("shrink_to_coverage: no rectangles");

    const std::size_t b = rects.size();
    std::vector<double> radii(b);
    for (std::size_t i = 0; i < b; ++i) {
        double r2 = 0.0;
        for (const Vec2& v : rects[i].vertices()) r2 = std::max(r2, mahalanobis2(ellipse, v));
        radii[i] = std::sqrt(r2);
    }

    auto keep = static_cast<std::size_t>(
        std::ceil((1.0 - alpha) * static_cast<double>(b)) + 0.5);
    keep = std::min(std::max<std::size_t>(keep, 1), b);

    std::vector<std::size_t> order(b);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return radii[i] < radii[j]; });
    const double rho = std::max(radii[order[keep - 1]], 1e-9);

    Ellipse out = ellipse;
    out.shape.xx /= rho * rho;
    out.shape.xy /= rho * rho;
    out.shape.yy /= rho * rho;
    return out;
}

/// Euclidean projection onto ellipse-box intersection by Dykstra
/// alternating projections.
inline Vec2 project_onto_region(Vec2 p, const VarianceRegion& region) {
    if (region.contains(p, 0.0)) return p;
    Vec2 x = p, pe{0.0, 0.0}, qb{0.0, 0.0};
    for (int round = 0; round < 500; ++round) {
        const Vec2 ye = project_to_ellipse(region.ellipse, x + pe);
        pe = x + pe - ye;
        const Vec2 xb = project_to_box(ye + qb, region.box_lo, region.box_hi);
        qb = ye + qb - xb;
        const double move = std::max(std::sqrt(norm2(xb - x)), std::sqrt(norm2(ye - xb)));
        x = xb;
        if (move < 1e-11) return x;
    }
    throw NumericalError("project_onto_region: Dykstra iteration did not converge");
}

/// Point estimate of (sigma^2(0), sigma^2(1)) from the SIPW means at the
/// fitted propensities.
inline Vec2 sigma_point_estimate(const StratumSample& sample) {
    auto f = [](double m) { return m * (1.0 - m); };
    return {f(sipw_mean(sample, Arm::Control)), f(sipw_mean(sample, Arm::Treated))};
}

/// Region construction from precomputed rectangles: minimum-volume ellipse
/// over all vertices, coverage shrink, box intersection. If the shrunken
/// ellipse misses the box entirely (possible only for near-degenerate
/// strata whose variances sit at the box floor), it is inflated minimally
/// so the region is nonempty.
inline VarianceRegion region_from_rectangles(const std::vector<ReplicateRectangle>& rects,
                                             const DesignConfig& cfg) {
    std::vector<Vec2> vertices;
    vertices.reserve(rects.size() * 4);
    for (const auto& r : rects)
        for (const Vec2& v : r.vertices()) vertices.push_back(v);

    const Ellipse mve = min_volume_ellipse(vertices, cfg.solver.mve_tol);
    VarianceRegion region;
    region.ellipse = shrink_to_coverage(mve, rects, cfg.alpha);
    region.box_lo = cfg.sigma_floor;
    region.box_hi = 0.25;

    const Vec2 anchor = project_to_box(region.ellipse.center, region.box_lo, region.box_hi);
    const double t2 = mahalanobis2(region.ellipse, anchor);
    if (t2 > 1.0) {
        const double s = t2 * (1.0 + 1e-9);
        region.ellipse.shape.xx /= s;
        region.ellipse.shape.xy /= s;
        region.ellipse.shape.yy /= s;
    }
    return region;
}

/// Full pipeline for one stratum: bootstrap, ellipse fit, shrink, clip.
inline VarianceRegion build_region(const StratumSample& sample, const DesignConfig& cfg) {
    return region_from_rectangles(
        bootstrap_rectangles(sample, cfg.gamma, cfg.bootstrap_reps, cfg.seed), cfg);
}

/// Regions for every stratum, optionally in parallel. Outputs are stored
/// per index, so the result is independent of thread count.
inline std::vector<VarianceRegion> build_all_regions(const Dataset& data, const DesignConfig& cfg,
                                                     int threads = 1) {
    validate_config(cfg, data.strata.size());
    std::vector<VarianceRegion> regions(data.strata.size());
    parallel_for(data.strata.size(), threads,
                 [&](std::size_t i) { regions[i] = build_region(data.strata[i], cfg); });
    return regions;
}

} // namespace obsdesign
