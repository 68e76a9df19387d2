#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "ordcausal/core.hpp"

namespace ordcausal {

enum class Metric { L1, TotalVariation };

/// Distance between marginal outcome distributions.  L1 is the paper's
/// reporting convention (0.804 on the GSS data); total variation is the
/// halved alternative.
inline double distance(const OrdinalDistribution& p0, const OrdinalDistribution& p1,
                       Metric metric = Metric::L1) {
    if (p0.k() != p1.k()) throw DataError("distance: mismatched k");
    double sum = 0.0;
    for (int i = 1; i <= p0.k(); ++i) sum += std::fabs(p1.p(i) - p0.p(i));
    return metric == Metric::L1 ? sum : 0.5 * sum;
}

inline double l1_distance(const OrdinalDistribution& p0, const OrdinalDistribution& p1) {
    return distance(p0, p1, Metric::L1);
}

inline double tv_distance(const OrdinalDistribution& p0, const OrdinalDistribution& p1) {
    return distance(p0, p1, Metric::TotalVariation);
}

enum class SummaryKind { Median, Mode };

/// Row-wise summaries of Y(1) given Y(0)=i.  Rows with no mass are left
/// undefined (mask false) rather than erroring; finite samples routinely
/// have empty rows.
struct ConditionalSummary {
    SummaryKind kind;
    std::vector<Category> values; // entry i-1 summarizes Y(1) | Y(0)=i
    std::vector<bool> defined;
};

namespace detail {

/// Lower median of a normalized pmf over 1..k: smallest m with CDF >= 1/2.
inline int lower_median(const std::vector<double>& pmf) {
    double cum = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        cum += pmf[i];
        if (cum >= 0.5 - kProbTol) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(pmf.size());
}

/// Mode with smallest-index tie-break.
inline int arg_mode(const std::vector<double>& pmf) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pmf.size(); ++i)
        if (pmf[i] > pmf[best] + kProbTol) best = i;
    return static_cast<int>(best) + 1;
}

} // namespace detail

inline ConditionalSummary conditional_summary(const JointDistribution& joint, SummaryKind kind) {
    const int k = joint.k();
    ConditionalSummary out{kind, {}, {}};
    out.values.reserve(static_cast<std::size_t>(k));
    out.defined.reserve(static_cast<std::size_t>(k));
    for (int i = 1; i <= k; ++i) {
        std::vector<double> row(static_cast<std::size_t>(k));
        double mass = 0.0;
        for (int j = 1; j <= k; ++j) mass += (row[j - 1] = joint.p(i, j));
        if (mass <= kProbTol) {
            out.values.emplace_back(1);
            out.defined.push_back(false);
            continue;
        }
        for (double& v : row) v /= mass;
        out.values.emplace_back(kind == SummaryKind::Median ? detail::lower_median(row)
                                                            : detail::arg_mode(row));
        out.defined.push_back(true);
    }
    return out;
}

/// Conditional summary of an empirical science table (rows as point masses).
inline ConditionalSummary conditional_summary(const ScienceTable& table, SummaryKind kind) {
    const int k = table.k();
    std::vector<double> cells(static_cast<std::size_t>(k) * k, 0.0);
    const double n = static_cast<double>(table.size());
    for (const auto& r : table.rows())
        cells[static_cast<std::size_t>(r.y0.value() - 1) * k + (r.y1.value() - 1)] += 1.0 / n;
    return conditional_summary(JointDistribution(k, std::move(cells)), kind);
}

/// Boes-style distributional contrasts between the two marginals.
struct DistributionalDeltas {
    std::vector<double> delta_ate; // P1(i) - P0(i)
    std::vector<double> delta_so;  // cumulative sums of delta_ate
    bool treated_dominates;        // all delta_so <= 0: treated CDF below control CDF
};

inline DistributionalDeltas distributional_deltas(const OrdinalDistribution& p0,
                                                  const OrdinalDistribution& p1) {
    if (p0.k() != p1.k()) throw DataError("distributional_deltas: mismatched k");
    DistributionalDeltas out;
    out.delta_ate.resize(static_cast<std::size_t>(p0.k()));
    out.delta_so.resize(static_cast<std::size_t>(p0.k()));
    double cum = 0.0;
    out.treated_dominates = true;
    for (int i = 1; i <= p0.k(); ++i) {
        out.delta_ate[i - 1] = p1.p(i) - p0.p(i);
        cum += out.delta_ate[i - 1];
        out.delta_so[i - 1] = cum;
        if (cum > kProbTol) out.treated_dominates = false;
    }
    return out;
}

struct MostLikelyPair {
    Category y0, y1;
    double probability;
};

/// argmax cell of the joint; ties broken by smallest (i, then j).
inline MostLikelyPair most_likely_pair(const JointDistribution& joint) {
    int bi = 1, bj = 1;
    double best = joint.p(1, 1);
    for (int i = 1; i <= joint.k(); ++i)
        for (int j = 1; j <= joint.k(); ++j)
            if (joint.p(i, j) > best + kProbTol) {
                best = joint.p(i, j);
                bi = i;
                bj = j;
            }
    return {Category(bi), Category(bj), best};
}

/// Proposition-1 classification: estimands separable into marginal-only
/// functions are estimable from an observed study; everything else needs a
/// model for the science.
enum class EstimandClass { MarginalOnly, RequiresJoint };

inline EstimandClass separability_guard(std::string_view estimand) {
    if (estimand == "l1_distance" || estimand == "tv_distance" ||
        estimand == "distributional_deltas" || estimand == "estimate_q")
        return EstimandClass::MarginalOnly;
    if (estimand == "conditional_median" || estimand == "conditional_mode" ||
        estimand == "most_likely_pair")
        return EstimandClass::RequiresJoint;
    throw ConfigError("separability_guard: unknown estimand '" + std::string(estimand) + "'");
}

/// Scalar marginal-only estimands evaluated straight from an observed study.
/// Refuses requires-joint estimands: those cannot be computed without a
/// model for the science.
inline double evaluate_marginal_estimand(std::string_view estimand, const ObservedStudy& study) {
    if (separability_guard(estimand) == EstimandClass::RequiresJoint)
        throw ConfigError("estimand '" + std::string(estimand) +
                          "' depends on the joint distribution of the potential outcomes; "
                          "it cannot be evaluated from an observed study alone");
    auto [p0, p1] = empirical_marginals(study);
    if (estimand == "l1_distance") return l1_distance(p0, p1);
    if (estimand == "tv_distance") return tv_distance(p0, p1);
    throw ConfigError("estimand '" + std::string(estimand) + "' is not scalar-valued");
}

} // namespace ordcausal
