#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "obsdesign/data_model.hpp"
#include "obsdesign/errors.hpp"

namespace obsdesign {

enum class Arm { Control = 0, Treated = 1 };

// Admissible range of the inverse-probability weight v_i under
// confounding level gamma.
struct WeightInterval {
    double lower = 1.0;
    double upper = 1.0;
};

// Extrema of the SIPW mean over all admissible weight assignments.
struct MeanBounds {
    double mu_lower = 0.0;
    double mu_upper = 0.0;
};

/// Weight interval for one unit. Treated arm:
/// [1 + (1-p)/(gamma p), 1 + gamma (1-p)/p]; control arm mirrors with
/// p <-> 1-p.
inline WeightInterval weight_interval(const UnitRecord& unit, double gamma, Arm arm) {
    const double p = unit.propensity;
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("propensity out of range (0,1)");
    if (gamma < 1.0) throw ValidationError("gamma must be >= 1");
    const double odds = arm == Arm::Treated ? (1.0 - p) / p : p / (1.0 - p);
    return {1.0 + odds / gamma, 1.0 + odds * gamma};
}

namespace detail {

inline bool in_arm(const UnitRecord& u, Arm arm) {
    return u.treated == (arm == Arm::Treated);
}

} // namespace detail

/// SIPW point estimate sum(Y v) / sum(v) with v = 1/p (treated) or
/// 1/(1-p) (control) over the units of the given arm.
inline double sipw_mean(const StratumSample& sample, Arm arm) {
    double num = 0.0, den = 0.0;
    for (const auto& u : sample.units) {
        if (!detail::in_arm(u, arm)) continue;
        const double v = arm == Arm::Treated ? 1.0 / u.propensity : 1.0 / (1.0 - u.propensity);
        num += u.outcome * v;
        den += v;
    }
    if (den == 0.0) throw ValidationError("sipw_mean: empty arm");
    return num / den;
}

// Per-unit weight intervals precomputed once per (sample, gamma) so that
// bootstrap replicates can evaluate extrema in O(n) without recomputing
// odds ratios.
struct PreparedWeights {
    std::vector<std::uint8_t> treated;
    std::vector<std::uint8_t> outcome;
    std::vector<double> lower;
    std::vector<double> upper;

    static PreparedWeights from(const StratumSample& sample, double gamma) {
        PreparedWeights p;
        const std::size_t n = sample.units.size();
        p.treated.resize(n);
        p.outcome.resize(n);
        p.lower.resize(n);
        p.upper.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& u = sample.units[i];
            p.treated[i] = u.treated ? 1 : 0;
            p.outcome[i] = static_cast<std::uint8_t>(u.outcome);
            const auto w = weight_interval(u, gamma, u.treated ? Arm::Treated : Arm::Control);
            p.lower[i] = w.lower;
            p.upper[i] = w.upper;
        }
        return p;
    }
};

/// Extrema of the SIPW mean over a multiset of unit indices. For binary
/// outcomes the maximum puts every Y=1 unit at its upper weight and every
/// Y=0 unit at its lower weight; the minimum reverses the assignment.
inline MeanBounds mean_extrema_indexed(const PreparedWeights& pw, std::span<const std::uint32_t> idx,
                                       Arm arm) {
    const std::uint8_t want = arm == Arm::Treated ? 1 : 0;
    // Accumulators: sums of lower/upper weights split by outcome value.
    double lo1 = 0.0, lo0 = 0.0, up1 = 0.0, up0 = 0.0;
    bool any = false;
    for (std::uint32_t i : idx) {
        if (pw.treated[i] != want) continue;
        any = true;
        if (pw.outcome[i]) {
            lo1 += pw.lower[i];
            up1 += pw.upper[i];
        } else {
            lo0 += pw.lower[i];
            up0 += pw.upper[i];
        }
    }
    if (!any) throw ValidationError("mean_extrema: empty arm");
    const double hi = up1 + lo0 > 0.0 ? up1 / (up1 + lo0) : 0.0;
    const double lo = lo1 + up0 > 0.0 ? lo1 / (lo1 + up0) : 0.0;
    return {lo, hi};
}

/// Extrema of the SIPW mean over the whole sample.
inline MeanBounds mean_extrema(const StratumSample& sample, Arm arm, double gamma) {
    const auto pw = PreparedWeights::from(sample, gamma);
    std::vector<std::uint32_t> idx(sample.units.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::uint32_t>(i);
    return mean_extrema_indexed(pw, idx, arm);
}

} // namespace obsdesign
