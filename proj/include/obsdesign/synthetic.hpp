#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "obsdesign/confidence_region.hpp"
#include "obsdesign/data_model.hpp"
#include "obsdesign/optimizer.hpp"
#include "obsdesign/rng.hpp"

namespace obsdesign {

struct SyntheticStratum {
    std::string id;
    double mu0 = 0.5;
    double mu1 = 0.5;
    long n_o = 1000;
    double propensity = 0.5;
};

enum class WeightMode { Population, Equal };

// Synthetic population: per-stratum true means, observational sizes and
// marginal treatment propensities, plus the strength of the latent
// confounder. outcome_tilt is the shift of the conditional outcome means
// by the latent variable; the stratum-marginal means stay at (mu0, mu1).
struct SyntheticSpec {
    std::vector<SyntheticStratum> strata;
    double confounding_gamma = 1.0;
    double outcome_tilt = 0.1;
    WeightMode weight_mode = WeightMode::Population;
    std::uint64_t seed = 0;
    int reps = 1000;
    std::vector<double> gammas{1.0};
};

struct BenchmarkRow {
    std::string design;
    // NaN for designs that do not depend on gamma.
    double gamma = std::numeric_limits<double>::quiet_NaN();
    double avg_loss = 0.0;
    double rel_to_equal = 0.0;
    double rel_to_naive = 0.0;
};

struct BenchmarkReport {
    std::vector<BenchmarkRow> rows;
    int reps = 0;
    std::uint64_t seed = 0;
    std::vector<double> tau;
};

inline void validate_spec(const SyntheticSpec& spec) {
    if (spec.strata.empty()) throw ValidationError("synthetic spec has no strata");
    if (spec.confounding_gamma < 1.0) throw ValidationError("confounding_gamma must be >= 1");
    if (spec.outcome_tilt < 0.0) throw ValidationError("outcome_tilt must be nonnegative");
    if (spec.reps < 1) throw ValidationError("reps must be >= 1");
    if (spec.gammas.empty()) throw ValidationError("gamma grid is empty");
    for (double g : spec.gammas)
        if (g < 1.0) throw ValidationError("gamma grid values must be >= 1");
    std::set<std::string> seen;
    for (const auto& st : spec.strata) {
        if (!seen.insert(st.id).second)
            throw ValidationError("duplicate stratum id '" + st.id + "' in synthetic spec");
        if (st.n_o < 2) throw ValidationError("stratum '" + st.id + "': n_o must be >= 2");
        if (!(st.propensity > 0.0 && st.propensity < 1.0))
            throw ValidationError("stratum '" + st.id + "': propensity out of range (0,1)");
        for (double mu : {st.mu0, st.mu1}) {
            if (!(mu > 0.0 && mu < 1.0))
                throw ValidationError("stratum '" + st.id + "': mean out of range (0,1)");
            if (mu - spec.outcome_tilt <= 0.0 || mu + spec.outcome_tilt >= 1.0)
                throw ValidationError("stratum '" + st.id +
                                      "': outcome_tilt pushes a conditional mean outside (0,1)");
        }
    }
}

namespace detail {

// Base treatment odds b such that the latent mixture
// 0.5 p(bG) + 0.5 p(b/G) equals the requested marginal propensity, where
// p(o) = o / (1 + o). Monotone in b, solved by bisection in log-odds.
inline double base_odds_for(double propensity, double g) {
    auto marginal = [&](double log_b) {
        const double b = std::exp(log_b);
        const double hi = b * g, lo = b / g;
        return 0.5 * (hi / (1.0 + hi) + lo / (1.0 + lo));
    };
    double left = -40.0, right = 40.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (left + right);
        (marginal(mid) < propensity ? left : right) = mid;
    }
    return std::exp(0.5 * (left + right));
}

} // namespace detail

/// Generates one observational dataset. Each unit draws a latent
/// U ~ Bern(1/2); treatment odds are base_odds * G^(2U-1) and both
/// conditional outcome means are shifted by +/- outcome_tilt with U, so the
/// recorded (stratum-constant) propensity and the marginal means match the
/// spec exactly.
inline Dataset generate_observational(const SyntheticSpec& spec) {
    validate_spec(spec);
    std::vector<StratumSample> strata;
    strata.reserve(spec.strata.size());
    const double g = spec.confounding_gamma;

    for (const auto& st : spec.strata) {
        const double b = detail::base_odds_for(st.propensity, g);
        const double p_hi = b * g / (1.0 + b * g);
        const double p_lo = (b / g) / (1.0 + b / g);

        StratumSample sample;
        sample.stratum_id = st.id;
        sample.units.reserve(static_cast<std::size_t>(st.n_o));
        Rng rng = stream_for(spec.seed, st.id, 0);
        for (long i = 0; i < st.n_o; ++i) {
            const bool u = rng.bernoulli(0.5);
            const bool w = rng.bernoulli(u ? p_hi : p_lo);
            const double tilt = u ? spec.outcome_tilt : -spec.outcome_tilt;
            const double mu = w ? st.mu1 + tilt : st.mu0 + tilt;
            UnitRecord rec;
            rec.treated = w;
            rec.outcome = rng.bernoulli(mu) ? 1 : 0;
            rec.propensity = st.propensity;
            sample.units.push_back(rec);
        }
        strata.push_back(std::move(sample));
    }

    if (spec.weight_mode == WeightMode::Equal)
        for (auto& s : strata) s.weight = 1.0 / static_cast<double>(strata.size());
    // Population mode leaves weights at zero; validation fills in n_ok/n_o.
    return validate_dataset(std::move(strata));
}

inline std::vector<SigmaSq> true_sigmas(const SyntheticSpec& spec) {
    std::vector<SigmaSq> out;
    out.reserve(spec.strata.size());
    for (const auto& st : spec.strata)
        out.push_back({st.mu0 * (1.0 - st.mu0), st.mu1 * (1.0 - st.mu1)});
    return out;
}

inline std::vector<double> true_tau(const SyntheticSpec& spec) {
    std::vector<double> out;
    out.reserve(spec.strata.size());
    for (const auto& st : spec.strata) out.push_back(st.mu1 - st.mu0);
    return out;
}

/// Average weighted L2 loss of difference-in-means estimates over `reps`
/// simulated experiments run under the given integer plan.
inline double run_pseudo_experiments(const SyntheticSpec& spec,
                                     const std::vector<ArmCountsInt>& plan, int reps,
                                     std::uint64_t seed, const std::vector<double>& weights) {
    const std::size_t k = spec.strata.size();
    if (plan.size() != k || weights.size() != k)
        throw ValidationError("run_pseudo_experiments: length mismatch");
    if (reps < 1) throw ValidationError("run_pseudo_experiments: reps must be >= 1");
    for (const auto& a : plan)
        if (a.treated < 1 || a.control < 1)
            throw ValidationError("run_pseudo_experiments: arm count below 1");

    const std::vector<double> tau = true_tau(spec);
    std::vector<double> tau_hat(k);
    double total = 0.0;
    for (int r = 0; r < reps; ++r) {
        for (std::size_t i = 0; i < k; ++i) {
            Rng rng = stream_for(mix_seed(seed, fnv1a(spec.strata[i].id)), "pseudo",
                                 static_cast<std::uint64_t>(r));
            long st = 0, sc = 0;
            for (long j = 0; j < plan[i].treated; ++j) st += rng.bernoulli(spec.strata[i].mu1);
            for (long j = 0; j < plan[i].control; ++j) sc += rng.bernoulli(spec.strata[i].mu0);
            tau_hat[i] = static_cast<double>(st) / static_cast<double>(plan[i].treated) -
                         static_cast<double>(sc) / static_cast<double>(plan[i].control);
        }
        total += l2_loss(tau_hat, tau, weights);
    }
    return total / static_cast<double>(reps);
}

/// Full evaluation protocol: generate the pilot data, build Equal,
/// Weighted, Naive and RegretMin designs (the last for every gamma in the
/// grid), score each by pseudo-experiments against the analytic truth.
inline BenchmarkReport benchmark(const SyntheticSpec& spec, const DesignConfig& base_cfg,
                                 int threads = 1) {
    validate_spec(spec);
    const Dataset data = generate_observational(spec);
    const std::vector<double> weights = data.weights();
    const std::uint64_t pe_seed = mix_seed(spec.seed, fnv1a("pseudo-experiments"));

    DesignConfig cfg = base_cfg;
    cfg.seed = spec.seed;

    DesignConfig cfg_equal = cfg;
    cfg_equal.default_rule = DefaultRule::Equal;
    const AllocationPlan equal_plan = default_allocation(cfg_equal, data);
    DesignConfig cfg_weighted = cfg;
    cfg_weighted.default_rule = DefaultRule::Weighted;
    const AllocationPlan weighted_plan = default_allocation(cfg_weighted, data);

    std::vector<SigmaSd> sds(data.strata.size());
    for (std::size_t i = 0; i < data.strata.size(); ++i) {
        const Vec2 p = sigma_point_estimate(data.strata[i]);
        sds[i] = {std::sqrt(p.x), std::sqrt(p.y)};
    }
    const AllocationPlan naive_plan = naive_allocation(sds, weights, cfg.n_r);

    auto score = [&](const std::vector<ArmCountsInt>& plan) {
        return run_pseudo_experiments(spec, plan, spec.reps, pe_seed, weights);
    };

    const double loss_equal = score(equal_plan.integer);
    const double loss_weighted = score(weighted_plan.integer);
    const double loss_naive = score(naive_plan.integer);

    auto rel = [](double a, double b) { return b != 0.0 ? (a - b) / b : 0.0; };
    BenchmarkReport report;
    report.reps = spec.reps;
    report.seed = spec.seed;
    report.tau = true_tau(spec);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    report.rows.push_back({"equal", nan, loss_equal, 0.0, rel(loss_equal, loss_naive)});
    report.rows.push_back(
        {"weighted", nan, loss_weighted, rel(loss_weighted, loss_equal), rel(loss_weighted, loss_naive)});
    report.rows.push_back({"naive", nan, loss_naive, rel(loss_naive, loss_equal), 0.0});

    for (double g : spec.gammas) {
        DesignConfig cfg_g = cfg;
        cfg_g.gamma = g;
        const AllocationPlan default_plan = default_allocation(cfg_g, data);
        const auto regions = build_all_regions(data, cfg_g, threads);
        const SolveReport solve = maximize_worst_case(regions, weights, cfg_g, default_plan);
        const double loss = score(solve.plan.integer);
        report.rows.push_back(
            {"regret_min", g, loss, rel(loss, loss_equal), rel(loss, loss_naive)});
    }
    return report;
}

} // namespace obsdesign
