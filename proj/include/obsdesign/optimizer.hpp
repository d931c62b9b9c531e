#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "obsdesign/confidence_region.hpp"
#include "obsdesign/data_model.hpp"
#include "obsdesign/errors.hpp"

namespace obsdesign {

struct SolveReport {
    std::vector<SigmaSq> sigmas;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    // True when the solved allocation offered no strict improvement over the
    // default, so the default plan was returned.
    bool defaulted = false;
    AllocationPlan plan;
    double wc_regret_continuous = 0.0;
    double wc_regret_integer = 0.0;
    std::vector<double> trace;
};

namespace detail {

inline std::vector<ArmCounts> neyman_continuous(const std::vector<SigmaSd>& sds,
                                                const std::vector<double>& weights, long n_r) {
    if (sds.size() != weights.size() || sds.empty())
        throw ValidationError("allocation: length mismatch");
    double denom = 0.0;
    for (std::size_t k = 0; k < sds.size(); ++k) {
        if (sds[k].sd0 < 0.0 || sds[k].sd1 < 0.0)
            throw ValidationError("allocation: negative sigma");
        denom += std::sqrt(weights[k]) * (sds[k].sd1 + sds[k].sd0);
    }
    if (!(denom > 0.0)) throw ValidationError("allocation: all sigmas zero");
    std::vector<ArmCounts> cont(sds.size());
    const double nr = static_cast<double>(n_r);
    for (std::size_t k = 0; k < sds.size(); ++k) {
        const double root_w = std::sqrt(weights[k]);
        cont[k].treated = nr * root_w * sds[k].sd1 / denom;
        cont[k].control = nr * root_w * sds[k].sd0 / denom;
    }
    return cont;
}

} // namespace detail

/// Variance-proportional allocation from standard-deviation point
/// estimates: n_kt = n_r sqrt(w_k) sd_k(1) / sum_j sqrt(w_j)(sd_j(1)+sd_j(0)).
inline AllocationPlan naive_allocation(const std::vector<SigmaSd>& sds,
                                       const std::vector<double>& weights, long n_r) {
    AllocationPlan plan;
    plan.continuous = detail::neyman_continuous(sds, weights, n_r);
    plan.integer = round_counts(plan.continuous, n_r);
    return plan;
}

/// Same allocation rule applied to variance coordinates s = sigma^2.
inline AllocationPlan allocation_from_sigmas(const std::vector<SigmaSq>& s,
                                             const std::vector<double>& weights, long n_r) {
    std::vector<SigmaSd> sds(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k].s0 < 0.0 || s[k].s1 < 0.0) throw ValidationError("allocation: negative variance");
        sds[k] = {std::sqrt(s[k].s0), std::sqrt(s[k].s1)};
    }
    AllocationPlan plan;
    plan.continuous = detail::neyman_continuous(sds, weights, n_r);
    plan.integer = round_counts(plan.continuous, n_r);
    return plan;
}

/// Reduced minimax objective: the regret of the best-response allocation
/// against the default, as a function of the variance vector s.
inline double objective_value(const std::vector<SigmaSq>& s, const std::vector<double>& weights,
                              const std::vector<ArmCounts>& default_cont, long n_r, double eps) {
    const std::size_t k = s.size();
    if (weights.size() != k || default_cont.size() != k)
        throw ValidationError("objective_value: length mismatch");
    double t = 0.0, linear = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (s[i].s0 < eps || s[i].s1 < eps)
            throw ValidationError("objective_value: coordinate below sigma_floor");
        if (default_cont[i].treated <= 0.0 || default_cont[i].control <= 0.0)
            throw ValidationError("objective_value: nonpositive default arm count");
        t += std::sqrt(weights[i]) * (std::sqrt(s[i].s1) + std::sqrt(s[i].s0));
        linear += weights[i] *
                  (s[i].s1 / default_cont[i].treated + s[i].s0 / default_cont[i].control);
    }
    return t * t / static_cast<double>(n_r) - linear;
}

/// Gradient of objective_value; layout [d/ds_10, d/ds_11, d/ds_20, ...].
inline std::vector<double> objective_gradient(const std::vector<SigmaSq>& s,
                                              const std::vector<double>& weights,
                                              const std::vector<ArmCounts>& default_cont,
                                              long n_r, double eps) {
    const std::size_t k = s.size();
    if (weights.size() != k || default_cont.size() != k)
        throw ValidationError("objective_gradient: length mismatch");
    double t = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (s[i].s0 < eps || s[i].s1 < eps)
            throw ValidationError("objective_gradient: coordinate below sigma_floor");
        t += std::sqrt(weights[i]) * (std::sqrt(s[i].s1) + std::sqrt(s[i].s0));
    }
    std::vector<double> g(2 * k);
    const double nr = static_cast<double>(n_r);
    for (std::size_t i = 0; i < k; ++i) {
        const double root_w = std::sqrt(weights[i]);
        g[2 * i] = root_w * t / (nr * std::sqrt(s[i].s0)) - weights[i] / default_cont[i].control;
        g[2 * i + 1] =
            root_w * t / (nr * std::sqrt(s[i].s1)) - weights[i] / default_cont[i].treated;
    }
    return g;
}

/// Maximum of a linear function c . x over one region, by projected ascent
/// restarted from the four box corners (a fixed point of x -> P(x + t c)
/// is a maximizer; the iteration map is firmly nonexpansive).
inline double max_linear_over_region(const VarianceRegion& region, Vec2 c) {
    const double cn = std::sqrt(norm2(c));
    if (cn == 0.0) return 0.0;
    const double span = region.box_hi - region.box_lo;
    const Vec2 corners[4] = {{region.box_lo, region.box_lo},
                             {region.box_lo, region.box_hi},
                             {region.box_hi, region.box_lo},
                             {region.box_hi, region.box_hi}};
    double best = -std::numeric_limits<double>::infinity();
    for (const Vec2& corner : corners) {
        Vec2 x = project_onto_region(corner, region);
        // Step length keeps each projection target within span/4 of the
        // region, well inside the Dykstra iteration budget.
        double t = 0.25 * span / cn;
        for (int phase = 0; phase < 5; ++phase) {
            for (int step = 0; step < 200; ++step) {
                const Vec2 xn = project_onto_region(x + c * t, region);
                if (std::sqrt(norm2(xn - x)) < 1e-13 * std::max(1.0, span)) break;
                x = xn;
            }
            t /= 16.0;
        }
        best = std::max(best, dot(c, x));
    }
    return best;
}

/// Worst-case regret of an allocation against the default, maximized over
/// the product of per-stratum regions. Separable: one 2-D linear
/// maximization per stratum.
inline double worst_case_regret(const std::vector<ArmCounts>& alloc,
                                const std::vector<VarianceRegion>& regions,
                                const std::vector<ArmCounts>& default_cont,
                                const std::vector<double>& weights) {
    const std::size_t k = regions.size();
    if (alloc.size() != k || default_cont.size() != k || weights.size() != k)
        throw ValidationError("worst_case_regret: length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (alloc[i].treated <= 0.0 || alloc[i].control <= 0.0)
            throw ValidationError("worst_case_regret: nonpositive arm count");
        const double c0 = weights[i] * (1.0 / alloc[i].control - 1.0 / default_cont[i].control);
        const double c1 = weights[i] * (1.0 / alloc[i].treated - 1.0 / default_cont[i].treated);
        if (c0 == 0.0 && c1 == 0.0) continue;
        total += max_linear_over_region(regions[i], {c0, c1});
    }
    return total;
}

inline double worst_case_regret(const std::vector<ArmCountsInt>& alloc,
                                const std::vector<VarianceRegion>& regions,
                                const std::vector<ArmCounts>& default_cont,
                                const std::vector<double>& weights) {
    std::vector<ArmCounts> cont(alloc.size());
    for (std::size_t i = 0; i < alloc.size(); ++i)
        cont[i] = {static_cast<double>(alloc[i].treated), static_cast<double>(alloc[i].control)};
    return worst_case_regret(cont, regions, default_cont, weights);
}

/// Projected gradient ascent on the reduced objective over the product of
/// regions, with Armijo backtracking. Convergence is certified by the
/// duality gap: worst_case_regret of the induced allocation minus the
/// objective bounds the distance to the saddle value. If the solved
/// allocation does not strictly improve on the default, the default plan
/// is returned (its worst-case regret is zero by definition).
inline SolveReport maximize_worst_case(const std::vector<VarianceRegion>& regions,
                                       const std::vector<double>& weights,
                                       const DesignConfig& cfg,
                                       const AllocationPlan& default_plan) {
    const std::size_t k = regions.size();
    if (k == 0) throw ValidationError("maximize_worst_case: no regions");
    if (weights.size() != k || default_plan.continuous.size() != k)
        throw ValidationError("maximize_worst_case: length mismatch");
    const std::vector<ArmCounts>& dflt = default_plan.continuous;
    const double eps = cfg.sigma_floor;
    const double gap_tol = 5e-9;

    std::vector<SigmaSq> s(k);
    for (std::size_t i = 0; i < k; ++i) {
        Vec2 p = project_to_box(regions[i].ellipse.center, regions[i].box_lo, regions[i].box_hi);
        if (!regions[i].contains(p)) p = project_onto_region(p, regions[i]);
        s[i] = {p.x, p.y};
    }

    SolveReport rep;
    double f = objective_value(s, weights, dflt, cfg.n_r, eps);
    if (!std::isfinite(f)) throw NumericalError("maximize_worst_case: non-finite objective");
    rep.trace.push_back(f);

    auto duality_gap = [&](double fval) {
        const auto cont = detail::neyman_continuous(
            [&] {
                std::vector<SigmaSd> sds(k);
                for (std::size_t i = 0; i < k; ++i)
                    sds[i] = {std::sqrt(s[i].s0), std::sqrt(s[i].s1)};
                return sds;
            }(),
            weights, cfg.n_r);
        return worst_case_regret(cont, regions, dflt, weights) - fval;
    };

    int iter = 0;
    while (iter < cfg.solver.max_iters) {
        ++iter;
        const auto grad = objective_gradient(s, weights, dflt, cfg.n_r, eps);

        double t = 1.0;
        std::vector<SigmaSq> cand(k);
        double fc = f;
        bool accepted = false, stationary = false;
        for (int half = 0; half < 60; ++half) {
            double dirdot = 0.0, move2 = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                Vec2 target{s[i].s0 + t * grad[2 * i], s[i].s1 + t * grad[2 * i + 1]};
                const Vec2 p = project_onto_region(target, regions[i]);
                cand[i] = {p.x, p.y};
                dirdot += grad[2 * i] * (p.x - s[i].s0) + grad[2 * i + 1] * (p.y - s[i].s1);
                move2 += (p.x - s[i].s0) * (p.x - s[i].s0) + (p.y - s[i].s1) * (p.y - s[i].s1);
            }
            if (move2 < 1e-32) {
                stationary = true;
                break;
            }
            fc = objective_value(cand, weights, dflt, cfg.n_r, eps);
            if (!std::isfinite(fc))
                throw NumericalError("maximize_worst_case: non-finite objective");
            if (fc >= f + 1e-4 * dirdot) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }

        if (stationary || !accepted) {
            rep.converged = duality_gap(f) <= gap_tol;
            break;
        }

        const double rel = std::abs(fc - f) / std::max(1.0, std::abs(fc));
        s = cand;
        f = fc;
        rep.trace.push_back(f);
        if (rel < cfg.solver.rel_tol || iter % 25 == 0) {
            if (duality_gap(f) <= gap_tol) {
                rep.converged = true;
                break;
            }
        }
    }

    rep.iterations = iter;
    rep.sigmas = s;
    rep.objective = f;

    AllocationPlan candidate = allocation_from_sigmas(s, weights, cfg.n_r);
    const double wc_cand = worst_case_regret(candidate.continuous, regions, dflt, weights);
    if (wc_cand < -1e-12) {
        rep.plan = std::move(candidate);
        rep.wc_regret_continuous = wc_cand;
    } else {
        rep.defaulted = true;
        rep.plan = default_plan;
        rep.wc_regret_continuous = worst_case_regret(dflt, regions, dflt, weights);
    }
    rep.wc_regret_integer = worst_case_regret(rep.plan.integer, regions, dflt, weights);
    return rep;
}

} // namespace obsdesign
