#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ordcausal/estimands.hpp"
#include "ordcausal/gss.hpp"
#include "ordcausal/monotone.hpp"
#include "ordcausal/rng.hpp"

using namespace ordcausal;

namespace {

OrdinalDistribution random_distribution(int k, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (double& x : v) sum += (x = -std::log(uniform_open(rng)));
    for (double& x : v) x /= sum;
    return OrdinalDistribution(k, std::move(v));
}

/// Embed a k-distribution into a larger support via a strictly increasing
/// index map; the gaps get probability zero.
OrdinalDistribution embed(const OrdinalDistribution& p, const std::vector<int>& map, int big_k) {
    std::vector<double> v(static_cast<std::size_t>(big_k), 0.0);
    for (int i = 1; i <= p.k(); ++i) v[static_cast<std::size_t>(map[i - 1] - 1)] = p.p(i);
    return OrdinalDistribution(big_k, std::move(v));
}

} // namespace

TEST_CASE("l1 distance reproduces the paper's GSS statistic") {
    auto [p0, p1] = empirical_marginals(gss_dataset());
    CHECK(l1_distance(p0, p1) == Catch::Approx(0.804).margin(0.001));
    CHECK(tv_distance(p0, p1) == Catch::Approx(0.402).margin(0.001));
}

TEST_CASE("l1 distance basics") {
    OrdinalDistribution a(2, {0.5, 0.5}), b(2, {1.0, 0.0});
    CHECK(l1_distance(a, a) == 0.0);
    CHECK(l1_distance(a, b) == Catch::Approx(1.0));
    CHECK_THROWS_AS(l1_distance(a, OrdinalDistribution(3, {0.2, 0.3, 0.5})), DataError);
}

TEST_CASE("l1 distance is a metric (property test)") {
    auto rng = SeedSpec{99, 0}.engine();
    for (int rep = 0; rep < 200; ++rep) {
        auto a = random_distribution(4, rng), b = random_distribution(4, rng),
             c = random_distribution(4, rng);
        const double ab = l1_distance(a, b), ba = l1_distance(b, a);
        CHECK(ab == ba);                          // symmetry
        CHECK(ab >= 0.0);                         // nonnegativity
        CHECK(l1_distance(a, a) == 0.0);          // identity
        CHECK(ab <= l1_distance(a, c) + l1_distance(c, b) + 1e-12); // triangle
        if (ab == 0.0)
            for (int i = 1; i <= 4; ++i) CHECK(a.p(i) == Catch::Approx(b.p(i)).margin(1e-12));
    }
}

TEST_CASE("conditional summaries") {
    SECTION("staircase row 1 with q1 = 0.7: median of (0.3, 0.7, 0) is 2") {
        auto joint = StaircaseJoint(1.0 / 3, 1.0 / 3, 1.0 / 3, 0.7, 2.0 / 3).expand();
        auto med = conditional_summary(joint, SummaryKind::Median);
        CHECK(med.defined[0]);
        CHECK(med.values[0].value() == 2);
    }
    SECTION("diagonal joint returns the identity for both kinds") {
        JointDistribution diag(3, {0.2, 0, 0, 0, 0.3, 0, 0, 0, 0.5});
        for (auto kind : {SummaryKind::Median, SummaryKind::Mode}) {
            auto s = conditional_summary(diag, kind);
            for (int i = 1; i <= 3; ++i) {
                CHECK(s.defined[static_cast<std::size_t>(i - 1)]);
                CHECK(s.values[static_cast<std::size_t>(i - 1)].value() == i);
            }
        }
    }
    SECTION("tie conventions: row (0.5, 0.5, 0) gives lower median 1 and mode 1") {
        JointDistribution joint(3, {0.25, 0.25, 0, 0, 0.5, 0, 0, 0, 0});
        auto med = conditional_summary(joint, SummaryKind::Median);
        auto mod = conditional_summary(joint, SummaryKind::Mode);
        CHECK(med.values[0].value() == 1);
        CHECK(mod.values[0].value() == 1);
        // zero rows get masked, not thrown
        CHECK_FALSE(med.defined[2]);
    }
}

TEST_CASE("distributional deltas") {
    SECTION("GSS delta_ate at the top category") {
        auto [p0, p1] = empirical_marginals(gss_dataset());
        auto d = distributional_deltas(p0, p1);
        CHECK(d.delta_ate[4] == Catch::Approx(0.175).margin(5e-4));
    }
    SECTION("identical marginals give all zeros") {
        OrdinalDistribution p(3, {0.2, 0.3, 0.5});
        auto d = distributional_deltas(p, p);
        for (double v : d.delta_ate) CHECK(v == 0.0);
        for (double v : d.delta_so) CHECK(v == 0.0);
        CHECK(d.treated_dominates); // weakly
    }
    SECTION("extreme upward shift dominates") {
        auto d = distributional_deltas(OrdinalDistribution(2, {1, 0}), OrdinalDistribution(2, {0, 1}));
        CHECK(d.delta_so[0] == Catch::Approx(-1.0));
        CHECK(d.delta_so[1] == Catch::Approx(0.0).margin(1e-12));
        CHECK(d.treated_dominates);
    }
    SECTION("sum of delta_ate is zero and delta_so is its cumulative sum (property)") {
        auto rng = SeedSpec{31, 0}.engine();
        for (int rep = 0; rep < 100; ++rep) {
            auto a = random_distribution(5, rng), b = random_distribution(5, rng);
            auto d = distributional_deltas(a, b);
            double sum = 0.0, cum = 0.0;
            for (std::size_t i = 0; i < 5; ++i) {
                sum += d.delta_ate[i];
                cum += d.delta_ate[i];
                CHECK(d.delta_so[i] == Catch::Approx(cum).margin(1e-12));
            }
            CHECK(std::fabs(sum) < 1e-12);
            CHECK(std::fabs(d.delta_so[4]) < 1e-12);
        }
    }
}

TEST_CASE("most likely pair") {
    SECTION("Table 1 staircase: (3,3) with probability 1/3") {
        auto joint = StaircaseJoint(1.0 / 3, 1.0 / 3, 1.0 / 3, 0.7, 2.0 / 3).expand();
        auto ml = most_likely_pair(joint);
        CHECK(ml.y0.value() == 3);
        CHECK(ml.y1.value() == 3);
        CHECK(ml.probability == Catch::Approx(1.0 / 3));
    }
    SECTION("point mass") {
        JointDistribution joint(3, {0, 0, 0, 0, 0, 1, 0, 0, 0});
        auto ml = most_likely_pair(joint);
        CHECK(ml.y0.value() == 2);
        CHECK(ml.y1.value() == 3);
        CHECK(ml.probability == 1.0);
    }
    SECTION("uniform joint ties break to (1,1)") {
        JointDistribution joint(2, {0.25, 0.25, 0.25, 0.25});
        auto ml = most_likely_pair(joint);
        CHECK(ml.y0.value() == 1);
        CHECK(ml.y1.value() == 1);
        CHECK(ml.probability == Catch::Approx(0.25));
    }
}

TEST_CASE("monotone binary joint recovery") {
    SECTION("worked example: Pr(Y(1)=low)=0.3, Pr(Y(0)=high)=0.4") {
        OrdinalDistribution p0(2, {0.6, 0.4}), p1(2, {0.3, 0.7});
        auto joint = monotone_binary_joint(p0, p1);
        CHECK(joint.p(1, 1) == Catch::Approx(0.3));
        CHECK(joint.p(1, 2) == Catch::Approx(0.3));
        CHECK(joint.p(2, 1) == 0.0);
        CHECK(joint.p(2, 2) == Catch::Approx(0.4));
    }
    SECTION("no effect gives the diagonal joint") {
        OrdinalDistribution p(2, {0.35, 0.65});
        auto joint = monotone_binary_joint(p, p);
        CHECK(joint.p(1, 1) == Catch::Approx(0.35));
        CHECK(joint.p(1, 2) == Catch::Approx(0.0).margin(1e-12));
        CHECK(joint.p(2, 2) == Catch::Approx(0.65));
    }
    SECTION("infeasible marginals error") {
        CHECK_THROWS_AS(
            monotone_binary_joint(OrdinalDistribution(2, {0.6, 0.4}), OrdinalDistribution(2, {0.8, 0.2})),
            DataError);
        CHECK_THROWS_AS(
            monotone_binary_joint(OrdinalDistribution(3, {0.2, 0.3, 0.5}), OrdinalDistribution(3, {0.2, 0.3, 0.5})),
            DataError);
    }
    SECTION("output marginals reproduce the inputs (property)") {
        auto rng = SeedSpec{77, 0}.engine();
        for (int rep = 0; rep < 200; ++rep) {
            double low1 = uniform01(rng), low0 = low1 + (1.0 - low1) * uniform01(rng);
            OrdinalDistribution p0(2, {low0, 1 - low0}), p1(2, {low1, 1 - low1});
            auto joint = monotone_binary_joint(p0, p1);
            CHECK(joint.marginal0().p(1) == Catch::Approx(p0.p(1)).margin(1e-12));
            CHECK(joint.marginal1().p(1) == Catch::Approx(p1.p(1)).margin(1e-12));
        }
    }
}

TEST_CASE("monotone bounds check") {
    SECTION("monotone tables satisfy all three families") {
        auto rng = SeedSpec{55, 0}.engine();
        for (int rep = 0; rep < 50; ++rep) {
            std::vector<ScienceTable::Row> rows;
            for (int i = 0; i < 40; ++i) {
                int y0 = 1 + static_cast<int>(uniform_below(rng, 4));
                int y1 = y0 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(4 - y0) + 1));
                rows.push_back({Category(y0), Category(y1)});
            }
            auto report = monotone_bounds_check(ScienceTable(4, rows));
            CHECK(report.all_hold);
        }
    }
    SECTION("identity table holds with equality in family 1") {
        std::vector<ScienceTable::Row> rows;
        for (int i = 1; i <= 3; ++i) rows.push_back({Category(i), Category(i)});
        auto report = monotone_bounds_check(ScienceTable(3, rows));
        CHECK(report.all_hold);
        for (const auto& b : report.conditional) CHECK(b.lhs == b.rhs);
    }
    SECTION("single row (1,3)") {
        auto report = monotone_bounds_check(ScienceTable(3, {{Category(1), Category(3)}}));
        CHECK(report.all_hold);
        REQUIRE(report.conditional.size() == 1);
        CHECK(report.conditional[0].rhs == 3);
    }
    SECTION("non-monotone tables are rejected") {
        CHECK_THROWS_AS(monotone_bounds_check(ScienceTable(3, {{Category(2), Category(1)}})), DataError);
    }
}

TEST_CASE("separability guard") {
    CHECK(separability_guard("l1_distance") == EstimandClass::MarginalOnly);
    CHECK(separability_guard("distributional_deltas") == EstimandClass::MarginalOnly);
    CHECK(separability_guard("estimate_q") == EstimandClass::MarginalOnly);
    CHECK(separability_guard("conditional_median") == EstimandClass::RequiresJoint);
    CHECK(separability_guard("conditional_mode") == EstimandClass::RequiresJoint);
    CHECK(separability_guard("most_likely_pair") == EstimandClass::RequiresJoint);
    CHECK_THROWS_AS(separability_guard("average_treatment_effect"), ConfigError);

    ObservedStudy study(2, {{Category(1), 0, {}}, {Category(2), 1, {}}});
    CHECK(evaluate_marginal_estimand("l1_distance", study) == Catch::Approx(2.0));
    CHECK_THROWS_AS(evaluate_marginal_estimand("conditional_median", study), ConfigError);
}

TEST_CASE("estimands are invariant under strictly increasing relabelings") {
    auto rng = SeedSpec{13, 0}.engine();
    const std::vector<int> map{1, 5, 9}; // {1,2,3} -> {1,5,9}
    for (int rep = 0; rep < 50; ++rep) {
        auto p0 = random_distribution(3, rng), p1 = random_distribution(3, rng);
        auto e0 = embed(p0, map, 9), e1 = embed(p1, map, 9);
        CHECK(l1_distance(p0, p1) == Catch::Approx(l1_distance(e0, e1)).margin(1e-12));
        auto d = distributional_deltas(p0, p1), de = distributional_deltas(e0, e1);
        CHECK(d.treated_dominates == de.treated_dominates);
        // delta_so values at original levels appear unchanged at mapped levels
        for (int i = 1; i <= 3; ++i)
            CHECK(d.delta_so[static_cast<std::size_t>(i - 1)] ==
                  Catch::Approx(de.delta_so[static_cast<std::size_t>(map[i - 1] - 1)]).margin(1e-12));
    }
    // joint-based estimands map through the relabeling
    auto joint = StaircaseJoint(0.3, 0.45, 0.25, 0.4, 0.8).expand();
    std::vector<double> big(81, 0.0);
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j)
            big[static_cast<std::size_t>(map[i - 1] - 1) * 9 + (map[j - 1] - 1)] = joint.p(i, j);
    JointDistribution joint9(9, big);
    auto ml = most_likely_pair(joint), ml9 = most_likely_pair(joint9);
    CHECK(map[ml.y0.value() - 1] == ml9.y0.value());
    CHECK(map[ml.y1.value() - 1] == ml9.y1.value());
    auto med = conditional_summary(joint, SummaryKind::Median);
    auto med9 = conditional_summary(joint9, SummaryKind::Median);
    for (int i = 1; i <= 3; ++i)
        CHECK(map[med.values[static_cast<std::size_t>(i - 1)].value() - 1] ==
              med9.values[static_cast<std::size_t>(map[i - 1] - 1)].value());
}
