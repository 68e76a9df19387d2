#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ordcausal/rng.hpp"

namespace ordcausal {

// Error taxonomy; the CLI maps these onto its exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr double kProbTol = 1e-12;

/// An ordinal category: a 1-based position on the observed scale.
/// Categories order and compare; they expose no arithmetic, because index
/// differences carry no magnitude on an ordinal non-numeric scale.
class Category {
  public:
    Category() = default;
    explicit Category(int index) : index_(index) {
        if (index < 1) throw DataError("Category index must be >= 1");
    }
    [[nodiscard]] int value() const { return index_; }
    auto operator<=>(const Category&) const = default;

  private:
    int index_ = 1;
};

/// Order-aligned display labels for categories 1..k (may be empty).
class CategoryLabels {
  public:
    CategoryLabels() = default;
    explicit CategoryLabels(std::vector<std::string> labels) : labels_(std::move(labels)) {
        std::set<std::string> seen(labels_.begin(), labels_.end());
        if (seen.size() != labels_.size()) throw DataError("category labels must be unique");
    }
    [[nodiscard]] bool empty() const { return labels_.empty(); }
    [[nodiscard]] std::size_t size() const { return labels_.size(); }
    [[nodiscard]] const std::string& at(int category_index) const {
        return labels_.at(static_cast<std::size_t>(category_index - 1));
    }
    [[nodiscard]] const std::vector<std::string>& all() const { return labels_; }

  private:
    std::vector<std::string> labels_;
};

/// Complete potential outcomes for N units: row i is (Y_i(0), Y_i(1)).
/// Ground truth in simulations, imputed object in inference.
class ScienceTable {
  public:
    struct Row {
        Category y0, y1;
    };

    ScienceTable(int k, std::vector<Row> rows, CategoryLabels labels = {})
        : k_(k), rows_(std::move(rows)), labels_(std::move(labels)) {
        if (k_ < 1) throw DataError("ScienceTable: k must be >= 1");
        if (rows_.empty()) throw DataError("ScienceTable: needs at least one unit");
        for (const auto& r : rows_) {
            if (r.y0.value() > k_ || r.y1.value() > k_)
                throw DataError("ScienceTable: potential outcome outside 1..k");
        }
        if (!labels_.empty() && labels_.size() != static_cast<std::size_t>(k_))
            throw DataError("ScienceTable: label count != k");
    }

    [[nodiscard]] int k() const { return k_; }
    [[nodiscard]] std::size_t size() const { return rows_.size(); }
    [[nodiscard]] const Row& row(std::size_t i) const { return rows_[i]; }
    [[nodiscard]] const std::vector<Row>& rows() const { return rows_; }
    [[nodiscard]] const CategoryLabels& labels() const { return labels_; }

  private:
    int k_;
    std::vector<Row> rows_;
    CategoryLabels labels_;
};

/// What a real analysis sees: one outcome per unit plus its treatment arm,
/// optionally a covariate vector of common dimension.
class ObservedStudy {
  public:
    struct Unit {
        Category y_obs;
        int w = 0; // 0 = control, 1 = treated
        std::vector<double> x;
    };

    ObservedStudy(int k, std::vector<Unit> units, CategoryLabels labels = {})
        : k_(k), units_(std::move(units)), labels_(std::move(labels)) {
        if (k_ < 1) throw DataError("ObservedStudy: k must be >= 1");
        std::size_t dim = units_.empty() ? 0 : units_.front().x.size();
        int n_treated = 0, n_control = 0;
        for (const auto& u : units_) {
            if (u.y_obs.value() > k_) throw DataError("ObservedStudy: outcome outside 1..k");
            if (u.w != 0 && u.w != 1) throw DataError("ObservedStudy: w must be 0 or 1");
            if (u.x.size() != dim) throw DataError("ObservedStudy: ragged covariate vectors");
            (u.w == 1 ? n_treated : n_control)++;
        }
        if (n_treated == 0 || n_control == 0)
            throw DataError("ObservedStudy: needs at least one treated and one control unit");
        if (!labels_.empty() && labels_.size() != static_cast<std::size_t>(k_))
            throw DataError("ObservedStudy: label count != k");
        n_treated_ = n_treated;
    }

    [[nodiscard]] int k() const { return k_; }
    [[nodiscard]] std::size_t size() const { return units_.size(); }
    [[nodiscard]] std::size_t n_treated() const { return static_cast<std::size_t>(n_treated_); }
    [[nodiscard]] std::size_t n_control() const { return units_.size() - n_treated(); }
    [[nodiscard]] std::size_t covariate_dim() const { return units_.empty() ? 0 : units_.front().x.size(); }
    [[nodiscard]] const Unit& unit(std::size_t i) const { return units_[i]; }
    [[nodiscard]] const std::vector<Unit>& units() const { return units_; }
    [[nodiscard]] const CategoryLabels& labels() const { return labels_; }

  private:
    int k_;
    std::vector<Unit> units_;
    CategoryLabels labels_;
    int n_treated_ = 0;
};

/// Probability vector over categories 1..k.  Entries sum to one (1e-12);
/// zero-count categories stay in the support with probability 0 so k is
/// stable across arms.
class OrdinalDistribution {
  public:
    OrdinalDistribution(int k, std::vector<double> probs) : k_(k), probs_(std::move(probs)) {
        if (k_ < 1 || probs_.size() != static_cast<std::size_t>(k_))
            throw DataError("OrdinalDistribution: size mismatch");
        double sum = 0.0;
        for (double p : probs_) {
            if (p < 0.0) throw DataError("OrdinalDistribution: negative probability");
            sum += p;
        }
        if (std::fabs(sum - 1.0) > 1e-9) throw DataError("OrdinalDistribution: probabilities must sum to 1");
        // renormalize away accumulation error so invariants hold exactly downstream
        for (double& p : probs_) p /= sum;
    }

    [[nodiscard]] int k() const { return k_; }
    [[nodiscard]] double p(int category_index) const {
        return probs_.at(static_cast<std::size_t>(category_index - 1));
    }
    [[nodiscard]] const std::vector<double>& probs() const { return probs_; }

    [[nodiscard]] std::vector<double> cdf() const {
        std::vector<double> out(probs_.size());
        std::partial_sum(probs_.begin(), probs_.end(), out.begin());
        return out;
    }

  private:
    int k_;
    std::vector<double> probs_;
};

/// Joint distribution of (Y(0), Y(1)): k x k matrix, p_ij = Pr(Y(0)=i, Y(1)=j).
class JointDistribution {
  public:
    JointDistribution(int k, std::vector<double> cells) : k_(k), cells_(std::move(cells)) {
        if (k_ < 1 || cells_.size() != static_cast<std::size_t>(k_) * static_cast<std::size_t>(k_))
            throw DataError("JointDistribution: size mismatch");
        double sum = 0.0;
        for (double c : cells_) {
            if (c < 0.0) throw DataError("JointDistribution: negative cell");
            sum += c;
        }
        if (std::fabs(sum - 1.0) > 1e-9) throw DataError("JointDistribution: cells must sum to 1");
        for (double& c : cells_) c /= sum;
    }

    [[nodiscard]] int k() const { return k_; }
    [[nodiscard]] double p(int i, int j) const {
        return cells_[static_cast<std::size_t>(i - 1) * k_ + static_cast<std::size_t>(j - 1)];
    }
    [[nodiscard]] const std::vector<double>& cells() const { return cells_; }

    /// Row sums: marginal of Y(0).
    [[nodiscard]] OrdinalDistribution marginal0() const {
        std::vector<double> m(static_cast<std::size_t>(k_), 0.0);
        for (int i = 1; i <= k_; ++i)
            for (int j = 1; j <= k_; ++j) m[i - 1] += p(i, j);
        return OrdinalDistribution(k_, std::move(m));
    }
    /// Column sums: marginal of Y(1).
    [[nodiscard]] OrdinalDistribution marginal1() const {
        std::vector<double> m(static_cast<std::size_t>(k_), 0.0);
        for (int i = 1; i <= k_; ++i)
            for (int j = 1; j <= k_; ++j) m[j - 1] += p(i, j);
        return OrdinalDistribution(k_, std::move(m));
    }

  private:
    int k_;
    std::vector<double> cells_;
};

/// The k=3 one-step staircase joint: marginals (c1,c2,c3) with conditional
/// step-up probabilities (q1,q2).  Zero below the diagonal and beyond the
/// first super-diagonal.
struct StaircaseJoint {
    double c1, c2, c3;
    double q1, q2;

    StaircaseJoint(double c1_, double c2_, double c3_, double q1_, double q2_)
        : c1(c1_), c2(c2_), c3(c3_), q1(q1_), q2(q2_) {
        if (c1 < 0 || c2 < 0 || c3 < 0 || std::fabs(c1 + c2 + c3 - 1.0) > 1e-9)
            throw DataError("StaircaseJoint: marginals must lie on the simplex");
        if (q1 < 0 || q1 > 1 || q2 < 0 || q2 > 1) throw DataError("StaircaseJoint: q outside [0,1]");
    }

    [[nodiscard]] JointDistribution expand() const {
        std::vector<double> cells(9, 0.0);
        cells[0] = (1 - q1) * c1; // (1,1)
        cells[1] = q1 * c1;       // (1,2)
        cells[4] = (1 - q2) * c2; // (2,2)
        cells[5] = q2 * c2;       // (2,3)
        cells[8] = c3;            // (3,3)
        return JointDistribution(3, std::move(cells));
    }
};

/// Reveal an assignment: unit i shows y1 if assigned treatment, else y0.
inline ObservedStudy reveal(const ScienceTable& table, const std::vector<int>& assignment) {
    if (assignment.size() != table.size())
        throw DataError("reveal: assignment length != number of units");
    std::vector<ObservedStudy::Unit> units;
    units.reserve(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        int w = assignment[i];
        if (w != 0 && w != 1) throw DataError("reveal: assignment entries must be 0 or 1");
        units.push_back({w == 1 ? table.row(i).y1 : table.row(i).y0, w, {}});
    }
    return ObservedStudy(table.k(), std::move(units), table.labels());
}

/// Per-arm empirical outcome distributions: (control, treated).
inline std::pair<OrdinalDistribution, OrdinalDistribution> empirical_marginals(const ObservedStudy& study) {
    std::vector<double> c0(static_cast<std::size_t>(study.k()), 0.0);
    std::vector<double> c1(static_cast<std::size_t>(study.k()), 0.0);
    for (const auto& u : study.units()) (u.w == 1 ? c1 : c0)[u.y_obs.value() - 1] += 1.0;
    for (double& v : c0) v /= static_cast<double>(study.n_control());
    for (double& v : c1) v /= static_cast<double>(study.n_treated());
    return {OrdinalDistribution(study.k(), std::move(c0)), OrdinalDistribution(study.k(), std::move(c1))};
}

/// Marginals of a (fully known) science table over all N rows.
inline std::pair<OrdinalDistribution, OrdinalDistribution> table_marginals(const ScienceTable& table) {
    std::vector<double> m0(static_cast<std::size_t>(table.k()), 0.0);
    std::vector<double> m1(static_cast<std::size_t>(table.k()), 0.0);
    for (const auto& r : table.rows()) {
        m0[r.y0.value() - 1] += 1.0;
        m1[r.y1.value() - 1] += 1.0;
    }
    const double n = static_cast<double>(table.size());
    for (double& v : m0) v /= n;
    for (double& v : m1) v /= n;
    return {OrdinalDistribution(table.k(), std::move(m0)), OrdinalDistribution(table.k(), std::move(m1))};
}

/// N i.i.d. rows from a joint distribution; bit-reproducible per seed.
inline ScienceTable simulate_science(const JointDistribution& joint, std::size_t n, SeedSpec seed) {
    if (n < 1) throw DataError("simulate_science: n must be >= 1");
    auto rng = seed.engine();
    const int k = joint.k();
    std::vector<double> cum(joint.cells());
    std::partial_sum(cum.begin(), cum.end(), cum.begin());
    std::vector<ScienceTable::Row> rows;
    rows.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        double u = uniform01(rng);
        std::size_t cell = static_cast<std::size_t>(
            std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
        if (cell >= cum.size()) cell = cum.size() - 1;
        rows.push_back({Category(static_cast<int>(cell) / k + 1), Category(static_cast<int>(cell) % k + 1)});
    }
    return ScienceTable(k, std::move(rows));
}

/// Balanced complete randomization: floor(n/2) treated, rest control,
/// uniformly at random.
inline std::vector<int> balanced_assignment(std::size_t n, SeedSpec seed) {
    if (n < 2) throw DataError("balanced_assignment: needs at least two units");
    std::vector<int> w(n, 0);
    std::fill(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n / 2), 1);
    auto rng = seed.engine();
    shuffle(w, rng);
    return w;
}

} // namespace ordcausal
