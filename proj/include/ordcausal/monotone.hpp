#pragma once

#include <cmath>
#include <vector>

#include "ordcausal/core.hpp"
#include "ordcausal/estimands.hpp"

namespace ordcausal {

/// Recover the full 2x2 joint from the marginals under a monotone treatment
/// effect (low = category 1, high = category 2):
///   p(low,low)  = Pr(Y(1)=low)
///   p(high,high)= Pr(Y(0)=high)
///   p(low,high) = 1 - Pr(Y(1)=low) - Pr(Y(0)=high)
///   p(high,low) = 0
inline JointDistribution monotone_binary_joint(const OrdinalDistribution& p0,
                                               const OrdinalDistribution& p1) {
    if (p0.k() != 2 || p1.k() != 2) throw DataError("monotone_binary_joint: k must be 2");
    const double p_low_low = p1.p(1);
    const double p_high_high = p0.p(2);
    const double p_low_high = 1.0 - p_low_low - p_high_high; // = Pr(Y(0)=low) - Pr(Y(1)=low)
    if (p_low_high < -1e-9)
        throw DataError("monotone_binary_joint: marginals inconsistent with monotonicity "
                        "(Pr(Y(1)=low) > Pr(Y(0)=low) would force a negative cell)");
    return JointDistribution(2, {p_low_low, std::max(0.0, p_low_high), 0.0, p_high_high});
}

/// One checked inequality: lhs <= rhs at conditioning level j.
struct BoundCheck {
    int j;
    int lhs, rhs;
    bool holds;
};

/// Report of the three monotone-bound inequality families:
///   (1) j <= median[Y(1) | Y(0)=j]
///   (2) j <= median[Y(1) | Y(0)>=j]
///   (3) median[Y(0) | Y(0)<=j] <= median[Y(1) | Y(0)<=j]
struct MonotoneBoundsReport {
    std::vector<BoundCheck> conditional;      // family (1)
    std::vector<BoundCheck> upper_truncated;  // family (2)
    std::vector<BoundCheck> lower_truncated;  // family (3)
    bool all_hold = true;
};

namespace detail {

inline int empirical_lower_median(const std::vector<int>& values, int k) {
    std::vector<double> pmf(static_cast<std::size_t>(k), 0.0);
    for (int v : values) pmf[v - 1] += 1.0 / static_cast<double>(values.size());
    return lower_median(pmf);
}

} // namespace detail

/// Verify the monotone-treatment median bounds on a (monotone) science table.
inline MonotoneBoundsReport monotone_bounds_check(const ScienceTable& table) {
    for (const auto& r : table.rows())
        if (r.y1 < r.y0)
            throw DataError("monotone_bounds_check: table violates Y(1) >= Y(0)");

    MonotoneBoundsReport report;
    const int k = table.k();
    auto push = [&report](std::vector<BoundCheck>& family, int j, int lhs, int rhs) {
        family.push_back({j, lhs, rhs, lhs <= rhs});
        if (lhs > rhs) report.all_hold = false;
    };

    for (int j = 1; j <= k; ++j) {
        std::vector<int> eq, ge_y1, le_y0, le_y1;
        for (const auto& r : table.rows()) {
            if (r.y0.value() == j) eq.push_back(r.y1.value());
            if (r.y0.value() >= j) ge_y1.push_back(r.y1.value());
            if (r.y0.value() <= j) {
                le_y0.push_back(r.y0.value());
                le_y1.push_back(r.y1.value());
            }
        }
        if (!eq.empty()) push(report.conditional, j, j, detail::empirical_lower_median(eq, k));
        if (!ge_y1.empty()) push(report.upper_truncated, j, j, detail::empirical_lower_median(ge_y1, k));
        if (!le_y0.empty())
            push(report.lower_truncated, j, detail::empirical_lower_median(le_y0, k),
                 detail::empirical_lower_median(le_y1, k));
    }
    return report;
}

} // namespace ordcausal
