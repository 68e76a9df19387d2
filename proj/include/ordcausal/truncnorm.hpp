#pragma once

#include <cmath>
#include <limits>

#include "ordcausal/core.hpp"
#include "ordcausal/rng.hpp"

namespace ordcausal {

namespace detail {

constexpr double kTailThreshold = 6.0; // beyond this, Phi saturates in doubles

/// Robert's one-sided rejection from a shifted exponential; standard normal
/// truncated to [lo, inf) with lo deep in the right tail.
inline double tail_sample(Rng& rng, double lo, double hi) {
    const double rate = 0.5 * (lo + std::sqrt(lo * lo + 4.0));
    for (;;) {
        double z = lo - std::log(uniform_open(rng)) / rate;
        if (z > hi) continue;
        double diff = z - rate;
        if (uniform_open(rng) <= std::exp(-0.5 * diff * diff)) return z;
    }
}

} // namespace detail

/// Standard normal truncated to (lo, hi); pass +/-infinity for open sides.
/// Inverse-CDF in the bulk, shifted-exponential rejection past 6 sigma where
/// the inverse-CDF loses precision.
inline double truncated_standard_normal(Rng& rng, double lo, double hi) {
    if (!(lo < hi)) throw NumericError("truncated_standard_normal: empty interval");
    const double inf = std::numeric_limits<double>::infinity();
    if (lo == -inf && hi == inf) return normal(rng);
    if (lo >= detail::kTailThreshold) return detail::tail_sample(rng, lo, hi);
    if (hi <= -detail::kTailThreshold) return -detail::tail_sample(rng, -hi, -lo);

    const double plo = lo == -inf ? 0.0 : norm_cdf(lo);
    const double phi = hi == inf ? 1.0 : norm_cdf(hi);
    if (!(phi > plo)) {
        // interval mass underflows; fall back to the nearest boundary
        return std::fabs(lo) < std::fabs(hi) ? lo : hi;
    }
    double u = plo + uniform_open(rng) * (phi - plo);
    double z = norm_quantile(std::min(std::max(u, std::numeric_limits<double>::min()),
                                      1.0 - std::numeric_limits<double>::epsilon()));
    if (z <= lo) z = std::nextafter(lo, hi);
    if (z >= hi) z = std::nextafter(hi, lo);
    return z;
}

/// Normal(mean, sd^2) truncated to (lo, hi).
inline double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi) {
    const double inf = std::numeric_limits<double>::infinity();
    const double a = lo == -inf ? -inf : (lo - mean) / sd;
    const double b = hi == inf ? inf : (hi - mean) / sd;
    return mean + sd * truncated_standard_normal(rng, a, b);
}

} // namespace ordcausal
