#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "obsdesign/errors.hpp"

namespace obsdesign {

// One observational unit: treatment flag W, binary outcome Y, fitted
// propensity score.
struct UnitRecord {
    bool treated = false;
    int outcome = 0;
    double propensity = 0.5;
};

// All observational units of one stratum plus its population weight.
struct StratumSample {
    std::string stratum_id;
    double weight = 0.0;
    std::vector<UnitRecord> units;

    std::size_t treated_count() const {
        return static_cast<std::size_t>(
            std::count_if(units.begin(), units.end(), [](const UnitRecord& u) { return u.treated; }));
    }
    std::size_t control_count() const { return units.size() - treated_count(); }
};

struct Dataset {
    std::vector<StratumSample> strata;
    std::vector<std::string> warnings;

    std::vector<double> weights() const {
        std::vector<double> w;
        w.reserve(strata.size());
        for (const auto& s : strata) w.push_back(s.weight);
        return w;
    }
};

enum class DefaultRule { Equal, Weighted };

struct SolverOptions {
    int max_iters = 10000;
    double rel_tol = 1e-10;
    double mve_tol = 1e-7;
};

struct DesignConfig {
    double gamma = 1.0;
    double alpha = 0.10;
    int bootstrap_reps = 200;
    long n_r = 1000;
    DefaultRule default_rule = DefaultRule::Equal;
    std::uint64_t seed = 0;
    double sigma_floor = 1e-8;
    SolverOptions solver;
};

// Continuous arm counts for one stratum.
struct ArmCounts {
    double treated = 0.0;
    double control = 0.0;
};

// Integer arm counts for one stratum.
struct ArmCountsInt {
    long treated = 0;
    long control = 0;
};

struct AllocationPlan {
    std::vector<ArmCounts> continuous;
    std::vector<ArmCountsInt> integer;
};

// Potential-outcome variances (sigma^2(0), sigma^2(1)) for one stratum.
struct SigmaSq {
    double s0 = 0.0;
    double s1 = 0.0;
};

// Potential-outcome standard deviations (sigma(0), sigma(1)).
struct SigmaSd {
    double sd0 = 0.0;
    double sd1 = 0.0;
};

/// Validates strata and normalizes weights to sum 1. Missing weights
/// (all zero) default to population shares n_ok / n_o.
inline Dataset validate_dataset(std::vector<StratumSample> strata) {
    if (strata.empty()) throw ValidationError("dataset contains no strata");

    Dataset out;
    std::set<std::string> seen;
    std::size_t total_units = 0;
    for (const auto& s : strata) {
        if (!seen.insert(s.stratum_id).second)
            throw ValidationError("duplicate stratum id '" + s.stratum_id + "'");
        if (s.units.empty())
            throw ValidationError("stratum '" + s.stratum_id + "' is empty");
        if (s.weight < 0.0)
            throw ValidationError("stratum '" + s.stratum_id + "' has negative weight");
        std::size_t nt = 0;
        for (const auto& u : s.units) {
            if (u.outcome != 0 && u.outcome != 1)
                throw ValidationError("stratum '" + s.stratum_id + "': non-binary outcome");
            if (!(u.propensity > 0.0 && u.propensity < 1.0))
                throw ValidationError("stratum '" + s.stratum_id + "': propensity out of range (0,1)");
            nt += u.treated ? 1 : 0;
        }
        if (nt == 0) throw ValidationError("stratum '" + s.stratum_id + "' has no treated units");
        if (nt == s.units.size())
            throw ValidationError("stratum '" + s.stratum_id + "' has no control units");
        total_units += s.units.size();
    }

    double wsum = 0.0;
    for (const auto& s : strata) wsum += s.weight;
    if (wsum <= 0.0) {
        for (auto& s : strata)
            s.weight = static_cast<double>(s.units.size()) / static_cast<double>(total_units);
        out.warnings.push_back("weights missing; defaulted to population shares");
    } else if (std::abs(wsum - 1.0) > 1e-9) {
        for (auto& s : strata) s.weight /= wsum;
        out.warnings.push_back("weights renormalized to sum 1");
    }
    out.strata = std::move(strata);
    return out;
}

inline void validate_config(const DesignConfig& cfg, std::size_t n_strata) {
    if (cfg.gamma < 1.0) throw ValidationError("gamma must be >= 1");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)");
    if (cfg.bootstrap_reps < 1) throw ValidationError("bootstrap_reps must be >= 1");
    if (cfg.sigma_floor <= 0.0) throw ValidationError("sigma_floor must be positive");
    if (cfg.solver.max_iters < 1) throw ValidationError("max_iters must be >= 1");
    if (cfg.solver.rel_tol <= 0.0) throw ValidationError("rel_tol must be positive");
    if (cfg.solver.mve_tol <= 0.0) throw ValidationError("mve_tol must be positive");
    if (n_strata > 0 && cfg.n_r < 2 * static_cast<long>(n_strata))
        throw ValidationError("n_r too small: need at least 2 units per stratum");
}

/// Largest-remainder rounding of continuous arm counts to integers summing
/// to n_r with every arm floored at 1. Deficit for the floor is taken from
/// the largest counts; all ties break by position.
inline std::vector<ArmCountsInt> round_counts(const std::vector<ArmCounts>& cont, long n_r) {
    const std::size_t k = cont.size();
    if (k == 0) throw ValidationError("no strata to round");
    if (n_r < 2 * static_cast<long>(k))
        throw ValidationError("n_r too small: need at least 2 units per stratum");

    std::vector<double> vals(2 * k);
    for (std::size_t i = 0; i < k; ++i) {
        vals[2 * i] = cont[i].treated;
        vals[2 * i + 1] = cont[i].control;
    }

    std::vector<long> base(2 * k);
    std::vector<double> rem(2 * k);
    long assigned = 0;
    for (std::size_t i = 0; i < 2 * k; ++i) {
        base[i] = static_cast<long>(std::floor(std::max(0.0, vals[i])));
        rem[i] = std::max(0.0, vals[i]) - static_cast<double>(base[i]);
        assigned += base[i];
    }
    long deficit = n_r - assigned;
    if (deficit < 0) {
        // Continuous totals exceed n_r only through fp slack; trim from the
        // smallest remainders upward.
        std::vector<std::size_t> order(2 * k);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return rem[a] < rem[b]; });
        for (std::size_t i = 0; i < order.size() && deficit < 0; ++i) {
            if (base[order[i]] > 0) {
                --base[order[i]];
                ++deficit;
            }
        }
    } else if (deficit > 0) {
        std::vector<std::size_t> order(2 * k);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
        for (std::size_t i = 0; deficit > 0; i = (i + 1) % order.size()) {
            ++base[order[i]];
            --deficit;
        }
    }

    // Enforce the floor of one unit per arm.
    for (std::size_t i = 0; i < 2 * k; ++i) {
        while (base[i] < 1) {
            std::size_t donor = 2 * k;
            long best = 1;
            for (std::size_t j = 0; j < 2 * k; ++j) {
                if (base[j] > best) {
                    best = base[j];
                    donor = j;
                }
            }
            if (donor == 2 * k) throw NumericalError("cannot satisfy arm floor of 1");
            --base[donor];
            ++base[i];
        }
    }

    std::vector<ArmCountsInt> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        out[i].treated = base[2 * i];
        out[i].control = base[2 * i + 1];
    }
    return out;
}

/// Default allocation: Equal gives n_r/(2K) per arm; Weighted gives
/// w_k * n_r / 2 per arm so the total stays at n_r.
inline AllocationPlan default_allocation(const DesignConfig& cfg, const Dataset& data) {
    const std::size_t k = data.strata.size();
    validate_config(cfg, k);

    AllocationPlan plan;
    plan.continuous.resize(k);
    const double nr = static_cast<double>(cfg.n_r);
    for (std::size_t i = 0; i < k; ++i) {
        double per_arm = cfg.default_rule == DefaultRule::Equal
                             ? nr / (2.0 * static_cast<double>(k))
                             : data.strata[i].weight * nr / 2.0;
        plan.continuous[i] = {per_arm, per_arm};
    }
    plan.integer = round_counts(plan.continuous, cfg.n_r);
    return plan;
}

/// Risk of an allocation: sum_k w_k (s_k1 / n_kt + s_k0 / n_kc).
inline double risk(const std::vector<ArmCounts>& alloc, const std::vector<SigmaSq>& sigmas,
                   const std::vector<double>& weights) {
    if (alloc.size() != sigmas.size() || alloc.size() != weights.size())
        throw ValidationError("risk: length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < alloc.size(); ++i) {
        if (alloc[i].treated <= 0.0 || alloc[i].control <= 0.0)
            throw ValidationError("risk: nonpositive arm count");
        total += weights[i] * (sigmas[i].s1 / alloc[i].treated + sigmas[i].s0 / alloc[i].control);
    }
    return total;
}

inline double risk(const std::vector<ArmCountsInt>& alloc, const std::vector<SigmaSq>& sigmas,
                   const std::vector<double>& weights) {
    std::vector<ArmCounts> cont(alloc.size());
    for (std::size_t i = 0; i < alloc.size(); ++i)
        cont[i] = {static_cast<double>(alloc[i].treated), static_cast<double>(alloc[i].control)};
    return risk(cont, sigmas, weights);
}

/// Weighted L2 loss: sum_k w_k (est_k - truth_k)^2.
inline double l2_loss(const std::vector<double>& estimates, const std::vector<double>& truth,
                      const std::vector<double>& weights) {
    if (estimates.size() != truth.size() || estimates.size() != weights.size())
        throw ValidationError("l2_loss: length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        double d = estimates[i] - truth[i];
        total += weights[i] * d * d;
    }
    return total;
}

} // namespace obsdesign
