#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ordcausal/core.hpp"
#include "ordcausal/estimands.hpp"
#include "ordcausal/rng.hpp"

namespace ordcausal {

/// Definition-1 composite null: units at control level j step up one
/// category with probability eta; nobody else moves.  nu carries the Y(0)
/// marginal (the nuisance l_j, l_{j+1} live inside it).
struct NullSpec {
    Category j;
    double eta;
    OrdinalDistribution nu;

    NullSpec(Category j_, double eta_, OrdinalDistribution nu_)
        : j(j_), eta(eta_), nu(std::move(nu_)) {
        if (j.value() >= nu.k()) throw ConfigError("NullSpec: j must be < k");
        if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("NullSpec: eta must lie strictly inside (0,1)");
    }
};

/// Outcome of a randomization test.  For the sharp test, p_value is the
/// upper-tail Monte-Carlo p with the observed statistic appended to the
/// draws; for composite tests it is the two-sided p.  Both one-sided tails
/// are kept (the lower tail drives fiducial inversion).
struct TestResult {
    double observed = 0.0;
    std::vector<double> null_draws;
    double p_value = 1.0;
    double p_lower = 1.0; // Pr(T_null <= T_obs), add-one corrected
    double p_upper = 1.0; // Pr(T_null >= T_obs), add-one corrected
    std::size_t n_permutations = 0;
    std::size_t n_tables = 0;
};

namespace detail {

inline void tail_ps(TestResult& r) {
    const double B = static_cast<double>(r.null_draws.size());
    std::size_t le = 0, ge = 0;
    for (double d : r.null_draws) {
        if (d <= r.observed) ++le;
        if (d >= r.observed) ++ge;
    }
    r.p_lower = (static_cast<double>(le) + 1.0) / (B + 1.0);
    r.p_upper = (static_cast<double>(ge) + 1.0) / (B + 1.0);
}

/// Canonical outcome multiset of a study: y values sorted, so that every
/// downstream draw is invariant to unit reordering.
inline std::vector<int> sorted_outcomes(const ObservedStudy& study) {
    std::vector<int> y;
    y.reserve(study.size());
    for (const auto& u : study.units()) y.push_back(u.y_obs.value());
    std::sort(y.begin(), y.end());
    return y;
}

/// Per-arm category counts after assigning a random n1-subset of `pool`
/// to treatment.  `pool` is partially shuffled in place.
inline void permuted_counts(std::vector<int>& pool, std::size_t n1, int k, Rng& rng,
                            std::vector<double>& c0, std::vector<double>& c1) {
    const std::size_t n = pool.size();
    for (std::size_t i = 0; i < n1; ++i) {
        std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, n - i));
        std::swap(pool[i], pool[j]);
    }
    std::fill(c0.begin(), c0.end(), 0.0);
    std::fill(c1.begin(), c1.end(), 0.0);
    for (std::size_t i = 0; i < n1; ++i) c1[pool[i] - 1] += 1.0;
    for (std::size_t i = n1; i < n; ++i) c0[pool[i] - 1] += 1.0;
    const double d1 = static_cast<double>(n1), d0 = static_cast<double>(n - n1);
    for (int c = 0; c < k; ++c) {
        c1[c] /= d1;
        c0[c] /= d0;
    }
}

} // namespace detail

/// Statistic between per-arm empirical distributions (control, treated).
using ArmStatistic = std::function<double(const OrdinalDistribution&, const OrdinalDistribution&)>;

inline ArmStatistic distance_statistic(Metric metric) {
    return [metric](const OrdinalDistribution& p0, const OrdinalDistribution& p1) {
        return distance(p0, p1, metric);
    };
}

/// Plug-in conditional step-up estimator, truncated to [0,1]:
///   qhat_j = [ sum_{i<=j} (P0(i) - P1(i)) ] / P0(j),
/// the net flow across the j|j+1 boundary over the mass at j.  At j=1 this
/// is 1 - P1(1)/P0(1); it stays consistent at every level of a one-step
/// staircase.
inline double estimate_q(const OrdinalDistribution& p0, const OrdinalDistribution& p1, Category j) {
    if (j.value() >= p0.k()) throw ConfigError("estimate_q: j must be < k");
    if (p0.p(j.value()) <= 0.0)
        throw NumericError("estimate_q: control arm has no mass at category " + std::to_string(j.value()));
    double flow = 0.0;
    for (int i = 1; i <= j.value(); ++i) flow += p0.p(i) - p1.p(i);
    return std::clamp(flow / p0.p(j.value()), 0.0, 1.0);
}

inline double estimate_q(const ObservedStudy& study, Category j) {
    auto [p0, p1] = empirical_marginals(study);
    return estimate_q(p0, p1, j);
}

/// Fisher randomization test of the sharp null of no effect.  Under the
/// null the science table is the observed data itself; null draws permute
/// the treatment vector (arm sizes preserved).  One derived seed stream per
/// permutation, so parallel and serial runs agree bit-for-bit.
inline TestResult sharp_null_test(const ObservedStudy& study, const ArmStatistic& statistic,
                                  std::size_t n_perm, SeedSpec seed) {
    if (n_perm < 1) throw ConfigError("sharp_null_test: n_perm must be >= 1");
    auto [p0, p1] = empirical_marginals(study);
    TestResult result;
    result.observed = statistic(p0, p1);
    result.n_permutations = n_perm;
    result.n_tables = 1;
    result.null_draws.resize(n_perm);

    const std::vector<int> base = detail::sorted_outcomes(study);
    const std::size_t n1 = study.n_treated();
    const int k = study.k();
    parallel_for(n_perm, [&](std::size_t b) {
        auto rng = seed.child(b).engine();
        std::vector<int> pool = base;
        std::vector<double> c0(static_cast<std::size_t>(k)), c1(static_cast<std::size_t>(k));
        detail::permuted_counts(pool, n1, k, rng, c0, c1);
        result.null_draws[b] =
            statistic(OrdinalDistribution(k, c0), OrdinalDistribution(k, c1));
    });

    detail::tail_ps(result);
    result.p_value = result.p_upper;
    return result;
}

inline TestResult sharp_null_test(const ObservedStudy& study, Metric metric, std::size_t n_perm,
                                  SeedSpec seed) {
    return sharp_null_test(study, distance_statistic(metric), n_perm, seed);
}

/// Complete the science table under a Definition-1 null.  Control units
/// observed at j step up with probability eta; treated units observed at
/// j+1 step down with probability q = eta*nu(j) / (eta*nu(j) + nu(j+1));
/// everyone else copies the observed value.  Observed coordinates are never
/// altered, so reveal(completed, W) reproduces the study for every seed.
inline ScienceTable complete_science_table(const ObservedStudy& study, const NullSpec& null,
                                           SeedSpec seed) {
    if (null.nu.k() != study.k()) throw ConfigError("complete_science_table: nu has wrong k");
    const int j = null.j.value();
    const double lj = null.nu.p(j), lj1 = null.nu.p(j + 1);
    if (lj <= 0.0 && lj1 <= 0.0)
        throw NumericError("complete_science_table: nu(j) = nu(j+1) = 0 leaves q undefined");
    const double q = null.eta * lj / (null.eta * lj + lj1);

    auto rng = seed.engine();
    std::vector<ScienceTable::Row> rows;
    rows.reserve(study.size());
    for (const auto& u : study.units()) {
        const int y = u.y_obs.value();
        int y0 = y, y1 = y;
        if (u.w == 0 && y == j) {
            if (uniform01(rng) < null.eta) y1 = j + 1;
        } else if (u.w == 1 && y == j + 1) {
            if (uniform01(rng) < q) y0 = j;
        }
        rows.push_back({Category(y0), Category(y1)});
    }
    return ScienceTable(study.k(), std::move(rows), study.labels());
}

/// Statistic evaluated on re-revealed data inside composite tests.
struct CompositeStatistic {
    std::string name;
    ArmStatistic fn;
};

inline CompositeStatistic qhat_statistic(Category j) {
    return {"qhat_" + std::to_string(j.value()),
            [j](const OrdinalDistribution& p0, const OrdinalDistribution& p1) {
                return p0.p(j.value()) > 0.0 ? estimate_q(p0, p1, j)
                                             : std::numeric_limits<double>::quiet_NaN();
            }};
}

/// Permutation test of a composite Definition-1 null: n_tables stochastic
/// science-table completions, n_perm random assignments revealed from each,
/// all draws pooled; two-sided p of the observed statistic.  NaN draws
/// (statistic undefined on a degenerate split) are dropped from the pool.
inline TestResult composite_null_test(const ObservedStudy& study, const NullSpec& null,
                                      const CompositeStatistic& statistic, std::size_t n_tables,
                                      std::size_t n_perm_per_table, SeedSpec seed) {
    if (n_tables < 1 || n_perm_per_table < 1)
        throw ConfigError("composite_null_test: budgets must be >= 1");

    auto [p0_obs, p1_obs] = empirical_marginals(study);
    TestResult result;
    result.observed = statistic.fn(p0_obs, p1_obs);
    result.n_permutations = n_perm_per_table;
    result.n_tables = n_tables;
    result.null_draws.assign(n_tables * n_perm_per_table,
                             std::numeric_limits<double>::quiet_NaN());

    // Canonicalize to (w, y)-sorted units so the pooled draws depend on the
    // study only through its sufficient counts, never on unit order.
    std::vector<std::pair<int, int>> sorted_units; // (w, y)
    sorted_units.reserve(study.size());
    for (const auto& u : study.units()) sorted_units.emplace_back(u.w, u.y_obs.value());
    std::sort(sorted_units.begin(), sorted_units.end());

    const int k = study.k();
    const int j = null.j.value();
    const double lj = null.nu.p(j), lj1 = null.nu.p(j + 1);
    if (lj <= 0.0 && lj1 <= 0.0)
        throw NumericError("composite_null_test: nu(j) = nu(j+1) = 0 leaves q undefined");
    const double q = null.eta * lj / (null.eta * lj + lj1);
    const std::size_t n = study.size(), n1 = study.n_treated();

    parallel_for(n_tables, [&](std::size_t t) {
        SeedSpec table_seed = seed.child(t);
        auto rng = table_seed.child(0).engine();
        // completed rows encoded as y0 * (k+1) + y1 for the permutation pool
        std::vector<int> pool(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto [w, y] = sorted_units[i];
            int y0 = y, y1 = y;
            if (w == 0 && y == j) {
                if (uniform01(rng) < null.eta) y1 = j + 1;
            } else if (w == 1 && y == j + 1) {
                if (uniform01(rng) < q) y0 = j;
            }
            pool[i] = y0 * (k + 1) + y1;
        }
        std::vector<double> c0(static_cast<std::size_t>(k)), c1(static_cast<std::size_t>(k));
        std::vector<int> work = pool;
        for (std::size_t p = 0; p < n_perm_per_table; ++p) {
            auto perm_rng = table_seed.child(1 + p).engine();
            for (std::size_t i = 0; i < n1; ++i) {
                std::size_t m = i + static_cast<std::size_t>(uniform_below(perm_rng, n - i));
                std::swap(work[i], work[m]);
            }
            std::fill(c0.begin(), c0.end(), 0.0);
            std::fill(c1.begin(), c1.end(), 0.0);
            for (std::size_t i = 0; i < n1; ++i) c1[work[i] % (k + 1) - 1] += 1.0; // treated reveal y1
            for (std::size_t i = n1; i < n; ++i) c0[work[i] / (k + 1) - 1] += 1.0; // control reveal y0
            const double d1 = static_cast<double>(n1), d0 = static_cast<double>(n - n1);
            for (int c = 0; c < k; ++c) {
                c1[c] /= d1;
                c0[c] /= d0;
            }
            result.null_draws[t * n_perm_per_table + p] =
                statistic.fn(OrdinalDistribution(k, c0), OrdinalDistribution(k, c1));
        }
    });

    // drop NaN draws (degenerate splits)
    auto& d = result.null_draws;
    d.erase(std::remove_if(d.begin(), d.end(), [](double v) { return std::isnan(v); }), d.end());
    if (std::isnan(result.observed) || d.empty()) {
        result.p_value = result.p_lower = result.p_upper = 1.0;
        return result;
    }
    detail::tail_ps(result);
    result.p_value = std::min(1.0, 2.0 * std::min(result.p_lower, result.p_upper));
    return result;
}

inline TestResult composite_null_test(const ObservedStudy& study, const NullSpec& null,
                                      std::size_t n_tables, std::size_t n_perm_per_table,
                                      SeedSpec seed) {
    return composite_null_test(study, null, qhat_statistic(null.j), n_tables, n_perm_per_table, seed);
}

/// Nuisance-marginal sampler: uniform Dirichlet(1,...,1) with rejection to
/// per-coordinate floor/cap (matching the paper's clipped-simplex sampling).
struct NuSamplerSpec {
    double floor = 0.15;
    double cap = 0.60;
    std::size_t samples_per_eta = 20;
};

inline OrdinalDistribution sample_nu(int k, const NuSamplerSpec& spec, Rng& rng) {
    if (spec.floor * k > 1.0 || spec.cap * k < 1.0)
        throw ConfigError("sample_nu: floor/cap box does not intersect the simplex");
    for (int attempt = 0; attempt < 100000; ++attempt) {
        std::vector<double> v(static_cast<std::size_t>(k));
        double sum = 0.0;
        for (double& x : v) sum += (x = -std::log(uniform_open(rng)));
        bool ok = true;
        for (double& x : v) {
            x /= sum;
            if (x < spec.floor || x > spec.cap) ok = false;
        }
        if (ok) return OrdinalDistribution(k, std::move(v));
    }
    throw NumericError("sample_nu: rejection sampler failed to hit the floor/cap box");
}

/// Monte-Carlo budgets for composite tests and fiducial sweeps.
struct Budgets {
    std::size_t n_tables = 1000;
    std::size_t n_perm_per_table = 100;

    static Budgets paper_scale() { return {1000, 100}; }
    static Budgets fast() { return {100, 20}; }
};

/// One grid point of a fiducial sweep: per-nu p-values plus their
/// projections.
struct FiducialGridPoint {
    double eta = 0.0;
    std::vector<double> p_two_sided; // one per sampled nu
    std::vector<double> p_lower;     // one-sided CDF p per sampled nu
    double p_two_sided_avg = 0.0;    // the plotted curve
    double p_lower_min = 1.0;        // extremal projections (interval endpoints)
    double p_lower_max = 0.0;
    double p_lower_avg = 0.0;
};

/// Fiducial-type interval for the conditional effect q_j by inversion of
/// composite tests over an eta grid with nuisance-nu projection.
struct FiducialResult {
    Category j{1};
    double observed_q = 0.0;
    std::vector<FiducialGridPoint> grid;
    double lower = 0.0;
    double upper = 1.0;
    double alpha = 0.05;
    bool lower_bracketed = false; // false: endpoint fell on the grid boundary
    bool upper_bracketed = false;
};

/// Strictly increasing eta grid inside (0,1).
inline std::vector<double> eta_grid(double lo, double hi, std::size_t size) {
    if (!(lo > 0.0 && hi < 1.0 && lo < hi) || size < 2)
        throw ConfigError("eta_grid: need 0 < lo < hi < 1 and size >= 2");
    std::vector<double> g(size);
    for (std::size_t i = 0; i < size; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(size - 1);
    return g;
}

/// Invert composite tests over the grid.  Per eta, the one-sided CDF
/// p(eta, nu) = Pr(T_null <= T_obs) is computed for each sampled nu; the
/// composite null at eta is rejected only if every nu rejects, so the
/// lower endpoint uses min over nu and the upper endpoint max over nu
/// (conservative projection).  With p decreasing in eta the endpoints are
///   lower = sup{eta : min_nu p >= 1 - alpha/2},
///   upper = inf{eta : max_nu p <= alpha/2},
/// the paper's sup/inf inversion written for the CDF convention.
inline FiducialResult fiducial_interval(const ObservedStudy& study, Category j,
                                        const std::vector<double>& grid, const NuSamplerSpec& nu_spec,
                                        double alpha, const Budgets& budgets, SeedSpec seed) {
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (!(grid[i] < grid[i + 1]) || grid[i] <= 0.0 || grid[i + 1] >= 1.0)
            throw ConfigError("fiducial_interval: grid must be strictly increasing inside (0,1)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("fiducial_interval: alpha outside (0,1)");

    FiducialResult out;
    out.j = j;
    out.alpha = alpha;
    out.observed_q = estimate_q(study, j);
    out.grid.resize(grid.size());

    const std::size_t m = nu_spec.samples_per_eta;
    std::vector<double> p2(grid.size() * m), plo(grid.size() * m);
    parallel_for(grid.size() * m, [&](std::size_t item) {
        const std::size_t gi = item / m;
        SeedSpec point_seed = seed.child(item);
        auto nu_rng = point_seed.child(0).engine();
        OrdinalDistribution nu = sample_nu(study.k(), nu_spec, nu_rng);
        NullSpec null(j, grid[gi], nu);
        TestResult r = composite_null_test(study, null, budgets.n_tables, budgets.n_perm_per_table,
                                           point_seed.child(1));
        p2[item] = r.p_value;
        plo[item] = r.p_lower;
    });
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        auto& g = out.grid[gi];
        g.eta = grid[gi];
        g.p_two_sided.assign(p2.begin() + gi * m, p2.begin() + (gi + 1) * m);
        g.p_lower.assign(plo.begin() + gi * m, plo.begin() + (gi + 1) * m);
        for (std::size_t vi = 0; vi < m; ++vi) {
            g.p_two_sided_avg += g.p_two_sided[vi] / static_cast<double>(m);
            g.p_lower_avg += g.p_lower[vi] / static_cast<double>(m);
            g.p_lower_min = std::min(g.p_lower_min, g.p_lower[vi]);
            g.p_lower_max = std::max(g.p_lower_max, g.p_lower[vi]);
        }
    }

    const double lo_threshold = 1.0 - alpha / 2.0, hi_threshold = alpha / 2.0;
    out.lower = grid.front();
    out.upper = grid.back();
    for (const auto& g : out.grid) {
        if (g.p_lower_min >= lo_threshold) {
            out.lower = g.eta;
            out.lower_bracketed = true;
        }
    }
    for (auto it = out.grid.rbegin(); it != out.grid.rend(); ++it) {
        if (it->p_lower_max <= hi_threshold) {
            out.upper = it->eta;
            out.upper_bracketed = true;
        }
    }
    if (out.upper < out.lower) std::swap(out.lower, out.upper);
    return out;
}

} // namespace ordcausal
