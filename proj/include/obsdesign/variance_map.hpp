#pragma once

#include <algorithm>

#include "obsdesign/errors.hpp"
#include "obsdesign/sipw.hpp"

namespace obsdesign {

// Bounds on a Bernoulli variance, a subinterval of [0, 0.25].
struct VarBounds {
    double var_lower = 0.0;
    double var_upper = 0.0;
};

/// Image of f(x) = x(1-x) over a mean interval. f increases below 1/2 and
/// decreases above it, so the image is an interval with endpoints at the
/// mapped bounds unless the interval straddles 1/2, in which case the
/// maximum is 1/4.
inline VarBounds variance_bounds(const MeanBounds& mb) {
    const double lo = mb.mu_lower, hi = mb.mu_upper;
    if (lo > hi) throw ValidationError("variance_bounds: mu_lower > mu_upper");
    auto f = [](double x) { return x * (1.0 - x); };
    if (hi <= 0.5) return {f(lo), f(hi)};
    if (lo >= 0.5) return {f(hi), f(lo)};
    return {std::min(f(lo), f(hi)), 0.25};
}

} // namespace obsdesign
