#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <set>

#include "ordcausal/core.hpp"
#include "ordcausal/gss.hpp"

using namespace ordcausal;

namespace {

ScienceTable tiny_table() {
    return ScienceTable(2, {{Category(1), Category(2)}, {Category(2), Category(2)}});
}

} // namespace

TEST_CASE("type invariants are enforced at construction") {
    CHECK_THROWS_AS(Category(0), DataError);
    CHECK_THROWS_AS(ScienceTable(2, {{Category(1), Category(3)}}), DataError);
    CHECK_THROWS_AS(ScienceTable(2, {}), DataError);
    CHECK_THROWS_AS(OrdinalDistribution(2, {0.5, 0.4}), DataError);
    CHECK_THROWS_AS(OrdinalDistribution(2, {1.2, -0.2}), DataError);
    CHECK_THROWS_AS(JointDistribution(2, {0.5, 0.5, 0.5, 0.5}), DataError);
    CHECK_THROWS_AS(StaircaseJoint(0.5, 0.5, 0.5, 0.5, 0.5), DataError);
    CHECK_THROWS_AS(StaircaseJoint(1.0 / 3, 1.0 / 3, 1.0 / 3, 1.5, 0.5), DataError);
    // all-treated studies are degenerate
    CHECK_THROWS_AS(ObservedStudy(2, {{Category(1), 1, {}}, {Category(2), 1, {}}}), DataError);
    CHECK_THROWS_AS(ObservedStudy(2, {{Category(1), 0, {1.0}}, {Category(2), 1, {1.0, 2.0}}}),
                    DataError);
    CHECK_THROWS_AS(CategoryLabels({"a", "a"}), DataError);
}

TEST_CASE("reveal selects the assigned potential outcome") {
    auto table = tiny_table();

    ObservedStudy s1 = reveal(table, {0, 1});
    CHECK(s1.unit(0).y_obs.value() == 1);
    CHECK(s1.unit(0).w == 0);
    CHECK(s1.unit(1).y_obs.value() == 2);
    CHECK(s1.unit(1).w == 1);

    ObservedStudy s2 = reveal(table, {1, 0});
    CHECK(s2.unit(0).y_obs.value() == 2);
    CHECK(s2.unit(1).y_obs.value() == 2);
    CHECK(s2.unit(1).w == 0);

    CHECK_THROWS_AS(reveal(table, {1, 1}), DataError);
    CHECK_THROWS_AS(reveal(table, {0, 0}), DataError);
    CHECK_THROWS_AS(reveal(table, {0, 1, 0}), DataError);
}

TEST_CASE("empirical marginals") {
    SECTION("GSS counts give the Table 2 frequencies to 4 decimals") {
        auto [p0, p1] = empirical_marginals(gss_dataset());
        const double expected0[] = {0.1179, 0.5642, 0.0776, 0.1672, 0.0731};
        const double expected1[] = {0.0121, 0.2788, 0.0667, 0.3939, 0.2485};
        for (int i = 1; i <= 5; ++i) {
            CHECK(p0.p(i) == Catch::Approx(expected0[i - 1]).margin(5e-5));
            CHECK(p1.p(i) == Catch::Approx(expected1[i - 1]).margin(5e-5));
        }
    }
    SECTION("point mass keeps zero-count categories in the support") {
        ObservedStudy study(3, {{Category(3), 0, {}}, {Category(3), 1, {}}});
        auto [p0, p1] = empirical_marginals(study);
        CHECK(p0.probs() == std::vector<double>{0, 0, 1});
        CHECK(p1.probs() == std::vector<double>{0, 0, 1});
    }
    SECTION("one unit per arm") {
        ObservedStudy study(2, {{Category(1), 0, {}}, {Category(2), 1, {}}});
        auto [p0, p1] = empirical_marginals(study);
        CHECK(p0.probs() == std::vector<double>{1, 0});
        CHECK(p1.probs() == std::vector<double>{0, 1});
    }
}

TEST_CASE("staircase expansion matches the one-step zero pattern") {
    StaircaseJoint sj(1.0 / 3, 1.0 / 3, 1.0 / 3, 0.7, 2.0 / 3);
    JointDistribution joint = sj.expand();
    CHECK(joint.p(1, 1) == Catch::Approx(0.1));
    CHECK(joint.p(1, 2) == Catch::Approx(0.7 / 3));
    CHECK(joint.p(2, 2) == Catch::Approx(1.0 / 9));
    CHECK(joint.p(2, 3) == Catch::Approx(2.0 / 9));
    CHECK(joint.p(3, 3) == Catch::Approx(1.0 / 3));
    // zeros below the diagonal and past the first super-diagonal
    CHECK(joint.p(1, 3) == 0.0);
    CHECK(joint.p(2, 1) == 0.0);
    CHECK(joint.p(3, 1) == 0.0);
    CHECK(joint.p(3, 2) == 0.0);
    // expansion round-trips the marginals
    CHECK(joint.marginal0().p(1) == Catch::Approx(1.0 / 3));
    CHECK(joint.marginal0().p(2) == Catch::Approx(1.0 / 3));
    CHECK(joint.marginal1().p(3) == Catch::Approx(2.0 / 9 + 1.0 / 3));
}

TEST_CASE("simulate_science") {
    SECTION("degenerate point-mass joint") {
        JointDistribution point(2, {0, 0, 0, 1}); // all mass at (2,2)
        ScienceTable t = simulate_science(point, 5, {42, 0});
        for (const auto& r : t.rows()) {
            CHECK(r.y0.value() == 2);
            CHECK(r.y1.value() == 2);
        }
    }
    SECTION("empirical cell frequencies approach the joint (LLN oracle)") {
        JointDistribution joint = StaircaseJoint(1.0 / 3, 1.0 / 3, 1.0 / 3, 0.7, 2.0 / 3).expand();
        ScienceTable t = simulate_science(joint, 500, {7, 0});
        std::map<std::pair<int, int>, double> freq;
        for (const auto& r : t.rows()) freq[{r.y0.value(), r.y1.value()}] += 1.0 / 500.0;
        for (int i = 1; i <= 3; ++i)
            for (int j = 1; j <= 3; ++j)
                CHECK(std::fabs(freq[{i, j}] - joint.p(i, j)) < 0.06);
    }
    SECTION("identical seeds give identical tables, different seeds differ") {
        JointDistribution joint = StaircaseJoint(0.3, 0.3, 0.4, 0.5, 0.5).expand();
        ScienceTable a = simulate_science(joint, 100, {11, 3});
        ScienceTable b = simulate_science(joint, 100, {11, 3});
        ScienceTable c = simulate_science(joint, 100, {11, 4});
        bool all_equal = true, any_diff = false;
        for (std::size_t i = 0; i < 100; ++i) {
            all_equal &= a.row(i).y0 == b.row(i).y0 && a.row(i).y1 == b.row(i).y1;
            any_diff |= a.row(i).y0 != c.row(i).y0 || a.row(i).y1 != c.row(i).y1;
        }
        CHECK(all_equal);
        CHECK(any_diff);
    }
}

TEST_CASE("reveal after simulate preserves per-category counts") {
    JointDistribution joint = StaircaseJoint(0.25, 0.35, 0.4, 0.6, 0.3).expand();
    ScienceTable table = simulate_science(joint, 200, {5, 0});
    std::vector<int> assignment = balanced_assignment(200, {5, 1});
    ObservedStudy study = reveal(table, assignment);
    for (int cat = 1; cat <= 3; ++cat) {
        int from_study = 0, from_table = 0;
        for (std::size_t i = 0; i < 200; ++i) {
            if (assignment[i] == 0 && study.unit(i).y_obs.value() == cat) ++from_study;
            if (assignment[i] == 0 && table.row(i).y0.value() == cat) ++from_table;
        }
        CHECK(from_study == from_table);
    }
}

TEST_CASE("seed streams are stable and children are distinct") {
    SeedSpec root{123456789ULL, 0};
    auto e1 = root.engine();
    auto e2 = root.engine();
    for (int i = 0; i < 100; ++i) CHECK(e1() == e2());

    std::set<std::uint64_t> streams;
    for (std::uint64_t i = 0; i < 1000; ++i) streams.insert(root.child(i).stream);
    CHECK(streams.size() == 1000);
    CHECK(root.child(3).child(5).stream != root.child(5).child(3).stream);
}

TEST_CASE("gss dataset matches the published counts") {
    ObservedStudy gss = gss_dataset();
    CHECK(gss.size() == 835);
    CHECK(gss.n_control() == 670);
    CHECK(gss.n_treated() == 165);
    int y4_treated = 0, y1_treated = 0;
    for (const auto& u : gss.units()) {
        if (u.w == 1 && u.y_obs.value() == 4) ++y4_treated;
        if (u.w == 1 && u.y_obs.value() == 1) ++y1_treated;
    }
    CHECK(y4_treated == 65);
    CHECK(y1_treated == 2);
    CHECK(gss.labels().at(1) == "<HS");
    CHECK(gss.labels().at(5) == "GRAD");
}
