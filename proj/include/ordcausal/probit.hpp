#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ordcausal/core.hpp"
#include "ordcausal/estimands.hpp"
#include "ordcausal/rng.hpp"
#include "ordcausal/truncnorm.hpp"

namespace ordcausal {

/// Monotone step map between the latent and observed scales:
/// category(z) = j iff z in (s_{j-1}, s_j], with s_0 = -inf, s_k = +inf.
class CutoffMap {
  public:
    explicit CutoffMap(std::vector<double> interior) {
        const double inf = std::numeric_limits<double>::infinity();
        s_.reserve(interior.size() + 2);
        s_.push_back(-inf);
        for (double v : interior) s_.push_back(v);
        s_.push_back(inf);
        for (std::size_t i = 0; i + 1 < s_.size(); ++i)
            if (!(s_[i] < s_[i + 1])) throw NumericError("CutoffMap: cutoffs must increase strictly");
    }

    [[nodiscard]] int k() const { return static_cast<int>(s_.size()) - 1; }
    [[nodiscard]] double lower(int category) const { return s_[static_cast<std::size_t>(category - 1)]; }
    [[nodiscard]] double upper(int category) const { return s_[static_cast<std::size_t>(category)]; }
    [[nodiscard]] double interior(int j) const { return s_[static_cast<std::size_t>(j)]; } // j in 1..k-1
    /// s_idx for idx in 0..k; 0 and k are the infinities.
    [[nodiscard]] double bound(int idx) const { return s_[static_cast<std::size_t>(idx)]; }
    void set_interior(int j, double v) { s_[static_cast<std::size_t>(j)] = v; }

    [[nodiscard]] int category_of(double z) const {
        for (int j = 1; j < k(); ++j)
            if (z <= s_[static_cast<std::size_t>(j)]) return j;
        return k();
    }

  private:
    std::vector<double> s_;
};

enum class LikelihoodMode { Probit, Rank };
enum class CutoffSharing { Shared, PerArm };

struct ChainSpec {
    std::size_t iterations = 55000;
    std::size_t burn_in = 5000;
    std::size_t thin = 1;

    static ChainSpec paper_scale() { return {55000, 5000, 1}; }
    static ChainSpec ci_scale() { return {5500, 500, 1}; }
};

struct SamplerOptions {
    LikelihoodMode mode = LikelihoodMode::Rank;
    CutoffSharing sharing = CutoffSharing::Shared;
    double rho = 1.0;
    bool include_intercept = false;
    double cutoff_prior_sd = 100.0; // essentially flat; ordering imposed by the likelihood
    bool tie_per_arm_cutoffs = false; // per-arm plumbing with pooled updates (testing aid)
};

/// Gibbs sampler for the latent-variable model
///   Y_i(t) = g_t(Z_i(t)),   Z_i(t) = f(X_i, W_i) + eps_i(t),  eps ~ N(0,1),
/// with cor(eps(0), eps(1)) = rho fixed (never estimated), in either
/// ordered-probit form (explicit cutoffs, flat normal prior) or
/// rank-likelihood form (no cutoffs; Z constrained to the observed order).
class GibbsSampler {
  public:
    GibbsSampler(const ObservedStudy& study, SamplerOptions options, SeedSpec seed)
        : study_(&study), opt_(options), rng_(seed.engine()) {
        if (opt_.rho < 0.0 || opt_.rho > 1.0) throw ConfigError("GibbsSampler: rho outside [0,1]");
        n_ = study.size();
        k_ = study.k();
        build_design();
        init_state();
    }

    // --- one full sweep: beta, latents, cutoffs -------------------------
    void sweep() {
        beta_update();
        if (opt_.mode == LikelihoodMode::Probit) {
            for (std::size_t i = 0; i < n_; ++i) z_update_probit(i);
            const int groups = group_count();
            for (int g = 0; g < groups; ++g)
                for (int j = 1; j < k_; ++j) cutoff_update(g, j);
            if (opt_.tie_per_arm_cutoffs && groups == 2) cutoffs_[1] = cutoffs_[0];
        } else {
            for (std::size_t i = 0; i < n_; ++i) z_update_rank(i);
        }
        ++iteration_;
#ifndef NDEBUG
        assert(state_consistent());
#endif
    }

    /// Step 2: beta | Z ~ N( n/(n+1) (X'X)^{-1} X'Z,  n/(n+1) (X'X)^{-1} ).
    void beta_update() {
        Eigen::VectorXd zv = Eigen::Map<const Eigen::VectorXd>(z_.data(), static_cast<long>(n_));
        const double shrink = static_cast<double>(n_) / (static_cast<double>(n_) + 1.0);
        Eigen::VectorXd mean = shrink * (xtx_inverse_ * (design_.transpose() * zv));
        Eigen::VectorXd noise(beta_.size());
        for (long c = 0; c < noise.size(); ++c) noise[c] = normal(rng_);
        beta_ = mean + std::sqrt(shrink) * (cov_factor_ * noise);
        mu_ = design_ * beta_;
    }

    /// Step 3 (probit): Z_i ~ N(x_i beta, 1) truncated to its category's
    /// cutoff interval.
    void z_update_probit(std::size_t i) {
        const auto& map = cutoffs_[cutoff_group(i)];
        const int y = y_[i];
        double lo = map.lower(y), hi = map.upper(y);
        if (!(lo < hi))
            throw NumericError("z_update_probit: empty cutoff interval for unit " + std::to_string(i));
        set_z(i, truncated_normal(rng_, mu_[static_cast<long>(i)], 1.0, lo, hi));
    }

    /// Step 3 (rank): Z_i ~ N(x_i beta, 1) truncated to
    /// ( max{Z_m : Y_m < Y_i},  min{Z_m : Y_i < Y_m} ) within its rank group.
    void z_update_rank(std::size_t i) {
        const int g = rank_group(i);
        const int y = y_[i];
        auto& sets = z_by_category_[static_cast<std::size_t>(g)];
        sets[static_cast<std::size_t>(y - 1)].erase(sets[static_cast<std::size_t>(y - 1)].find(z_[i]));
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (int c = 1; c < y; ++c)
            if (!sets[static_cast<std::size_t>(c - 1)].empty())
                lo = std::max(lo, *sets[static_cast<std::size_t>(c - 1)].rbegin());
        for (int c = y + 1; c <= k_; ++c)
            if (!sets[static_cast<std::size_t>(c - 1)].empty())
                hi = std::min(hi, *sets[static_cast<std::size_t>(c - 1)].begin());
        z_[i] = truncated_normal(rng_, mu_[static_cast<long>(i)], 1.0, lo, hi);
        sets[static_cast<std::size_t>(y - 1)].insert(z_[i]);
    }

    /// Step 4: s_j ~ N(0, prior_sd^2) truncated to
    /// ( max{Z_i : Y_i = j},  min{Z_i : Y_i = j+1} ); an empty category
    /// falls back to the neighboring cutoff.
    void cutoff_update(int group, int j) {
        auto& map = cutoffs_[static_cast<std::size_t>(group)];
        const auto& sets = effective_cutoff_sets(group);
        const auto& below = sets[static_cast<std::size_t>(j - 1)];
        const auto& above = sets[static_cast<std::size_t>(j)];
        double lo = below.empty() ? map.bound(j - 1) : *below.rbegin();
        double hi = above.empty() ? map.bound(j + 1) : *above.begin();
        if (!(lo < hi)) throw NumericError("cutoff_update: inverted bounds (state invariant violated)");
        map.set_interior(j, truncated_normal(rng_, 0.0, opt_.cutoff_prior_sd, lo, hi));
    }

    /// Step 5: impute every unit's missing potential outcome from the
    /// posterior predictive at the current state and return the completed
    /// science table.  Z_mis | Z_obs is Normal with mean shifted by the
    /// counterfactual arm and correlation rho; rho = 1 copies the residual.
    [[nodiscard]] ScienceTable impute_missing() {
        std::vector<ScienceTable::Row> rows;
        rows.reserve(n_);
        const double rho = opt_.rho;
        const double resid_sd = std::sqrt(std::max(0.0, 1.0 - rho * rho));
        for (std::size_t i = 0; i < n_; ++i) {
            const int w = w_[i];
            const double mean_obs = mu_[static_cast<long>(i)];
            const double mean_mis = mean_obs + beta_w() * (w == 1 ? -1.0 : 1.0);
            double z_mis = mean_mis + rho * (z_[i] - mean_obs);
            if (rho < 1.0) z_mis += resid_sd * normal(rng_);
            const int y_mis = map_to_category(z_mis, 1 - w);
            const int y_obs = y_[i];
            rows.push_back(w == 1 ? ScienceTable::Row{Category(y_mis), Category(y_obs)}
                                  : ScienceTable::Row{Category(y_obs), Category(y_mis)});
        }
        return ScienceTable(k_, std::move(rows), study_->labels());
    }

    // --- state access ---------------------------------------------------
    [[nodiscard]] const Eigen::VectorXd& beta() const { return beta_; }
    [[nodiscard]] double beta_w() const { return beta_[beta_.size() - 1]; }
    [[nodiscard]] const std::vector<double>& z() const { return z_; }
    [[nodiscard]] const CutoffMap& cutoffs(int group = 0) const {
        return cutoffs_[static_cast<std::size_t>(group)];
    }
    [[nodiscard]] std::size_t iteration() const { return iteration_; }
    [[nodiscard]] const Eigen::MatrixXd& design() const { return design_; }
    [[nodiscard]] int group_count() const {
        return opt_.sharing == CutoffSharing::PerArm ? 2 : 1;
    }

    void set_beta(const Eigen::VectorXd& b) {
        if (b.size() != beta_.size()) throw ConfigError("set_beta: wrong dimension");
        beta_ = b;
        mu_ = design_ * beta_;
    }
    void set_cutoff_interior(int group, int j, double v) {
        cutoffs_[static_cast<std::size_t>(group)].set_interior(j, v);
    }
    void set_latents(const std::vector<double>& z) {
        if (z.size() != n_) throw ConfigError("set_latents: wrong length");
        for (std::size_t i = 0; i < n_; ++i) set_z(i, z[i]);
    }
    /// Replace the observed outcomes (successive-conditional simulators
    /// redraw data between transitions); latent bookkeeping is rebuilt.
    void set_outcomes(const std::vector<int>& y) {
        if (y.size() != n_) throw ConfigError("set_outcomes: wrong length");
        for (int v : y)
            if (v < 1 || v > k_) throw DataError("set_outcomes: category outside 1..k");
        y_ = y;
        rebuild_sets();
    }
    [[nodiscard]] const std::vector<int>& outcomes() const { return y_; }
    [[nodiscard]] Rng& rng() { return rng_; }

    [[nodiscard]] bool state_consistent() const {
        if (opt_.mode == LikelihoodMode::Probit) {
            for (std::size_t i = 0; i < n_; ++i) {
                const auto& map = cutoffs_[cutoff_group(i)];
                if (!(z_[i] >= map.lower(y_[i]) && z_[i] <= map.upper(y_[i]))) return false;
            }
        } else {
            for (std::size_t i = 0; i < n_; ++i)
                for (std::size_t m = 0; m < n_; ++m)
                    if (rank_group(i) == rank_group(m) && y_[i] < y_[m] && !(z_[i] < z_[m]))
                        return false;
        }
        return true;
    }

  private:
    void build_design() {
        const std::size_t d = study_->covariate_dim();
        const long p = static_cast<long>(d) + 1 + (opt_.include_intercept ? 1 : 0);
        design_.resize(static_cast<long>(n_), p);
        w_.resize(n_);
        y_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            const auto& u = study_->unit(i);
            long c = 0;
            if (opt_.include_intercept) design_(static_cast<long>(i), c++) = 1.0;
            for (double x : u.x) design_(static_cast<long>(i), c++) = x;
            design_(static_cast<long>(i), c) = static_cast<double>(u.w);
            w_[i] = u.w;
            y_[i] = u.y_obs.value();
        }
        Eigen::MatrixXd xtx = design_.transpose() * design_;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design_);
        if (qr.rank() < p)
            throw NumericError("GibbsSampler: X'X is singular (design not full column rank)");
        Eigen::LLT<Eigen::MatrixXd> llt(xtx);
        if (llt.info() != Eigen::Success)
            throw NumericError("GibbsSampler: X'X is singular (design not full column rank)");
        xtx_inverse_ = llt.solve(Eigen::MatrixXd::Identity(p, p));
        // factor M with M M' = (X'X)^{-1} for covariance draws
        Eigen::LLT<Eigen::MatrixXd> llt_inv(xtx_inverse_);
        if (llt_inv.info() != Eigen::Success)
            throw NumericError("GibbsSampler: failed to factor the posterior covariance");
        cov_factor_ = llt_inv.matrixL();
        beta_ = Eigen::VectorXd::Zero(p);
        mu_ = Eigen::VectorXd::Zero(static_cast<long>(n_));
    }

    void init_state() {
        // latent init: normal scores of category midranks
        std::vector<double> counts(static_cast<std::size_t>(k_), 0.0);
        for (int y : y_) counts[static_cast<std::size_t>(y - 1)] += 1.0;
        std::vector<double> score(static_cast<std::size_t>(k_), 0.0);
        double cum = 0.0;
        for (int c = 0; c < k_; ++c) {
            const double cnt = counts[static_cast<std::size_t>(c)];
            const double midrank = cum + (cnt + 1.0) / 2.0;
            score[static_cast<std::size_t>(c)] =
                cnt > 0 ? norm_quantile(midrank / (static_cast<double>(n_) + 1.0)) : 0.0;
            cum += cnt;
        }
        z_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) z_[i] = score[static_cast<std::size_t>(y_[i] - 1)];

        // cutoff init: quantile-matched to the pooled empirical CDF
        std::vector<double> interior;
        double acc = 0.0;
        for (int j = 1; j < k_; ++j) {
            acc += counts[static_cast<std::size_t>(j - 1)];
            double f = std::clamp(acc / static_cast<double>(n_), 1e-6, 1.0 - 1e-6);
            double v = norm_quantile(f);
            if (!interior.empty() && v <= interior.back())
                v = interior.back() + 1e-6; // empty category collapses the quantile
            interior.push_back(v);
        }
        cutoffs_.clear();
        cutoffs_.emplace_back(interior);
        if (group_count() == 2) cutoffs_.emplace_back(interior);
        rebuild_sets();
    }

    void rebuild_sets() {
        const int groups = (opt_.sharing == CutoffSharing::PerArm) ? 2 : 1;
        z_by_category_.assign(static_cast<std::size_t>(groups),
                              std::vector<std::multiset<double>>(static_cast<std::size_t>(k_)));
        for (std::size_t i = 0; i < n_; ++i)
            z_by_category_[rank_group(i)][static_cast<std::size_t>(y_[i] - 1)].insert(z_[i]);
    }

    void set_z(std::size_t i, double v) {
        auto& set = z_by_category_[rank_group(i)][static_cast<std::size_t>(y_[i] - 1)];
        set.erase(set.find(z_[i]));
        z_[i] = v;
        set.insert(v);
    }

    // Rank constraints and cutoff bounds bind within an arm when each arm
    // has its own map; otherwise globally.
    [[nodiscard]] std::size_t rank_group(std::size_t i) const {
        return opt_.sharing == CutoffSharing::PerArm ? static_cast<std::size_t>(w_[i]) : 0;
    }
    [[nodiscard]] std::size_t cutoff_group(std::size_t i) const { return rank_group(i); }

    [[nodiscard]] const std::vector<std::multiset<double>>& effective_cutoff_sets(int group) const {
        if (opt_.tie_per_arm_cutoffs) {
            // pooled bounds: merge is emulated by keeping one global set table
            return pooled_sets();
        }
        return z_by_category_[static_cast<std::size_t>(group)];
    }

    [[nodiscard]] const std::vector<std::multiset<double>>& pooled_sets() const {
        pooled_cache_.assign(static_cast<std::size_t>(k_), {});
        for (const auto& per_group : z_by_category_)
            for (std::size_t c = 0; c < per_group.size(); ++c)
                pooled_cache_[c].insert(per_group[c].begin(), per_group[c].end());
        return pooled_cache_;
    }

    [[nodiscard]] int map_to_category(double z, int arm) const {
        const std::size_t g = (opt_.sharing == CutoffSharing::PerArm) ? static_cast<std::size_t>(arm) : 0;
        if (opt_.mode == LikelihoodMode::Probit) return cutoffs_[g].category_of(z);
        // rank mode: nearest-rank intervals; category j spans
        // (B_{j-1}, B_j] with B_j the cumulative max latent over categories <= j
        const auto& sets = z_by_category_[g];
        double bound = -std::numeric_limits<double>::infinity();
        int last_nonempty = k_;
        for (int c = 1; c <= k_; ++c) {
            const auto& s = sets[static_cast<std::size_t>(c - 1)];
            if (!s.empty()) {
                bound = std::max(bound, *s.rbegin());
                last_nonempty = c;
                if (z <= bound) return c;
            }
        }
        return last_nonempty;
    }

    const ObservedStudy* study_;
    SamplerOptions opt_;
    Rng rng_;
    std::size_t n_ = 0;
    int k_ = 1;
    Eigen::MatrixXd design_;
    Eigen::MatrixXd xtx_inverse_;
    Eigen::MatrixXd cov_factor_;
    Eigen::VectorXd beta_;
    Eigen::VectorXd mu_;
    std::vector<double> z_;
    std::vector<int> y_;
    std::vector<int> w_;
    std::vector<CutoffMap> cutoffs_;
    std::vector<std::vector<std::multiset<double>>> z_by_category_;
    mutable std::vector<std::multiset<double>> pooled_cache_;
    std::size_t iteration_ = 0;
};

namespace detail {

/// Lower median of already-sorted draws.
template <typename T>
T sorted_lower_median(const std::vector<T>& sorted) {
    return sorted[(sorted.size() - 1) / 2];
}

template <typename T>
std::pair<T, T> sorted_central_interval(const std::vector<T>& sorted, double mass) {
    const double tail = (1.0 - mass) / 2.0;
    const auto n = static_cast<double>(sorted.size());
    std::size_t lo = static_cast<std::size_t>(std::floor(tail * (n - 1)));
    std::size_t hi = static_cast<std::size_t>(std::ceil((1.0 - tail) * (n - 1)));
    return {sorted[lo], sorted[hi]};
}

} // namespace detail

/// Posterior-predictive draws of a scalar observed-scale estimand.
struct ScalarPosterior {
    std::vector<double> draws;

    [[nodiscard]] double median() const {
        auto s = draws;
        std::sort(s.begin(), s.end());
        return detail::sorted_lower_median(s);
    }
    [[nodiscard]] std::pair<double, double> interval(double mass = 0.95) const {
        auto s = draws;
        std::sort(s.begin(), s.end());
        return detail::sorted_central_interval(s, mass);
    }
};

/// Posterior-predictive draws of a per-level categorical estimand such as
/// median[Y(1) | Y(0)=j].  draw value 0 marks "undefined" (no mass at the
/// conditioning level in that imputed table).
struct ConditionalPosterior {
    SummaryKind kind = SummaryKind::Median;
    int k = 0;
    std::vector<std::vector<int>> draws; // draws[l][j-1]

    [[nodiscard]] std::vector<int> defined_draws(int j) const {
        std::vector<int> v;
        v.reserve(draws.size());
        for (const auto& d : draws)
            if (d[static_cast<std::size_t>(j - 1)] != 0) v.push_back(d[static_cast<std::size_t>(j - 1)]);
        return v;
    }
    [[nodiscard]] double defined_fraction(int j) const {
        return draws.empty() ? 0.0
                             : static_cast<double>(defined_draws(j).size()) /
                                   static_cast<double>(draws.size());
    }
    /// Posterior median (lower-median convention, stays a category).
    [[nodiscard]] Category point(int j) const {
        auto v = defined_draws(j);
        if (v.empty()) throw NumericError("ConditionalPosterior: level never defined");
        std::sort(v.begin(), v.end());
        return Category(detail::sorted_lower_median(v));
    }
    [[nodiscard]] std::pair<Category, Category> interval(int j, double mass = 0.95) const {
        auto v = defined_draws(j);
        if (v.empty()) throw NumericError("ConditionalPosterior: level never defined");
        std::sort(v.begin(), v.end());
        auto [lo, hi] = detail::sorted_central_interval(v, mass);
        return {Category(lo), Category(hi)};
    }
};

struct FitConfig {
    SamplerOptions sampler;
    ChainSpec chain;
    std::vector<std::string> estimands{"conditional_median"};
};

struct FitResult {
    std::vector<std::pair<std::string, ConditionalPosterior>> conditional;
    std::vector<std::pair<std::string, ScalarPosterior>> scalars;
    std::vector<double> beta_w_draws; // retained treatment-coefficient trace
    std::size_t retained = 0;

    [[nodiscard]] const ConditionalPosterior& conditional_summary(const std::string& name) const {
        for (const auto& [n, s] : conditional)
            if (n == name) return s;
        throw ConfigError("FitResult: no conditional estimand '" + name + "'");
    }
    [[nodiscard]] const ScalarPosterior& scalar_summary(const std::string& name) const {
        for (const auto& [n, s] : scalars)
            if (n == name) return s;
        throw ConfigError("FitResult: no scalar estimand '" + name + "'");
    }
};

/// Run the selected Gibbs scheme; per retained draw, impute the missing
/// potential outcomes and evaluate each requested observed-scale estimand
/// on the completed science table.
inline FitResult fit(const ObservedStudy& study, const FitConfig& config, SeedSpec seed) {
    if (config.chain.burn_in >= config.chain.iterations)
        throw ConfigError("fit: burn-in must be smaller than the iteration count");
    if (config.chain.thin < 1) throw ConfigError("fit: thinning must be >= 1");
    for (const auto& name : config.estimands)
        if (name != "conditional_median" && name != "conditional_mode" && name != "l1_distance" &&
            name != "tv_distance")
            throw ConfigError("fit: unsupported estimand '" + name + "'");

    GibbsSampler sampler(study, config.sampler, seed);
    FitResult out;
    for (const auto& name : config.estimands) {
        if (name == "conditional_median" || name == "conditional_mode")
            out.conditional.emplace_back(
                name, ConditionalPosterior{name == "conditional_median" ? SummaryKind::Median
                                                                        : SummaryKind::Mode,
                                           study.k(),
                                           {}});
        else
            out.scalars.emplace_back(name, ScalarPosterior{});
    }

    for (std::size_t it = 0; it < config.chain.iterations; ++it) {
        sampler.sweep();
        if (it < config.chain.burn_in) continue;
        if ((it - config.chain.burn_in) % config.chain.thin != 0) continue;

        ScienceTable table = sampler.impute_missing();
        out.beta_w_draws.push_back(sampler.beta_w());
        ++out.retained;
        for (auto& [name, post] : out.conditional) {
            ConditionalSummary s = ordcausal::conditional_summary(table, post.kind);
            std::vector<int> row(static_cast<std::size_t>(study.k()), 0);
            for (int j = 1; j <= study.k(); ++j)
                if (s.defined[static_cast<std::size_t>(j - 1)])
                    row[static_cast<std::size_t>(j - 1)] = s.values[static_cast<std::size_t>(j - 1)].value();
            post.draws.push_back(std::move(row));
        }
        if (!out.scalars.empty()) {
            auto [m0, m1] = table_marginals(table);
            for (auto& [name, post] : out.scalars)
                post.draws.push_back(name == "l1_distance" ? l1_distance(m0, m1) : tv_distance(m0, m1));
        }
    }
    return out;
}

/// Pearson correlation of the comonotone (Frechet-Hoeffding upper bound)
/// coupling of two ordinal marginals, categories scored by index.  The
/// paper's heuristic default for rho.
inline double frechet_rho(const OrdinalDistribution& p0, const OrdinalDistribution& p1) {
    if (p0.k() != p1.k()) throw DataError("frechet_rho: mismatched k");
    const int k = p0.k();
    auto f0 = p0.cdf(), f1 = p1.cdf();
    double e_xy = 0.0;
    for (int i = 1; i <= k; ++i) {
        const double a0 = i == 1 ? 0.0 : f0[static_cast<std::size_t>(i - 2)];
        const double b0 = f0[static_cast<std::size_t>(i - 1)];
        for (int j = 1; j <= k; ++j) {
            const double a1 = j == 1 ? 0.0 : f1[static_cast<std::size_t>(j - 2)];
            const double b1 = f1[static_cast<std::size_t>(j - 1)];
            const double overlap = std::min(b0, b1) - std::max(a0, a1);
            if (overlap > 0.0) e_xy += overlap * i * j;
        }
    }
    double m0 = 0.0, m1 = 0.0, s0 = 0.0, s1 = 0.0;
    for (int i = 1; i <= k; ++i) {
        m0 += p0.p(i) * i;
        m1 += p1.p(i) * i;
        s0 += p0.p(i) * i * i;
        s1 += p1.p(i) * i * i;
    }
    const double v0 = s0 - m0 * m0, v1 = s1 - m1 * m1;
    if (v0 <= kProbTol || v1 <= kProbTol)
        throw NumericError("frechet_rho: a marginal is a point mass; correlation undefined");
    return (e_xy - m0 * m1) / std::sqrt(v0 * v1);
}

} // namespace ordcausal
