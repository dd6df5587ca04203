#include <gtest/gtest.h>

#include <random>

#include "crd/example_sources.hpp"
#include "crd/rd_composite.hpp"
#include "test_support.hpp"

using namespace crd;

namespace {

// Two states, three symbols and two labels: symbols 0 and 1 share a label.
SourceModel random_ternary_model(std::mt19937_64& rng)
{
    SourceModel m;
    m.source = CompositeSource::create(test::names(2), test::names(3), test::names(3), test::random_joint(rng, 2, 3));
    m.classifier = {{"a", "b"}, {0, 0, 1}};
    m.criteria = {{"0", hamming_distortion(3, 3), {true, false}}, {"1", hamming_distortion(3, 3), {false, true}}};
    return m;
}

} // namespace

TEST(RG, QuaternaryDiagonalCurve)
{
    const auto m = example2();
    for (int k = 1; k <= 9; ++k) {
        const double d = 0.05 * k;
        EXPECT_NEAR(r_g(m, {d, d}).rate, 1.0 - binary_entropy(d), 1e-3) << d;
    }
}

TEST(RG, PerfectClassificationClosedFormAgrees)
{
    const auto m = example2();
    for (const DistortionBudget& b : std::vector<DistortionBudget>{{0.0, 0.0}, {0.1, 0.3}, {0.45, 0.05}, {0.2, 0.6}})
        EXPECT_NEAR(r_g_perfect(m, b), r_g(m, b).rate, 1e-3);
    EXPECT_CRD_ERROR(r_g_perfect(example1(), {0.25, 0.25}), ErrorCode::NotPerfectClassification);
}

TEST(RG, SingleClassCollapsesToRStar)
{
    auto m = example1();
    m.classifier = Classifier::single_class(2);
    for (const DistortionBudget& b : std::vector<DistortionBudget>{{0.1, 0.1}, {0.25, 0.25}, {0.05, 0.4}}) {
        const double rs = r_star(m, b).rate;
        EXPECT_NEAR(r_g(m, b).rate, rs, 1e-6);
        EXPECT_NEAR(r_c(m, b), rs, 1e-6);
    }
}

TEST(RG, OrderingOnBinaryInstance)
{
    const auto m = example1();
    const double h = label_entropy(m.source, m.classifier);
    for (double d0 = 0.0; d0 <= 0.5; d0 += 0.1)
        for (double d1 = 0.0; d1 <= 0.5; d1 += 0.1) {
            const double rs = r_star(m, {d0, d1}).rate;
            const double rg = r_g(m, {d0, d1}).rate;
            EXPECT_LE(rg, rs + kOrderingTolerance) << d0 << "," << d1;
            EXPECT_LE(rs, rg + h + kOrderingTolerance) << d0 << "," << d1;
        }
}

TEST(RG, DualAndCoordinateDescentAgree)
{
    std::mt19937_64 rng(314);
    AllocationOptions cd;
    cd.method = AllocationMethod::CoordinateDescent;
    for (int t = 0; t < 4; ++t) {
        const auto m = random_ternary_model(rng);
        const DistortionBudget b = {test::uniform(rng, 0.05, 0.4), test::uniform(rng, 0.05, 0.4)};
        const auto dual = r_g(m, b);
        const auto coord = r_g(m, b, cd);
        EXPECT_NEAR(dual.rate, coord.rate, 1e-3) << t;
        EXPECT_TRUE(allocation_feasible(m, b, dual.allocation));
        EXPECT_TRUE(allocation_feasible(m, b, coord.allocation));
    }
}

TEST(RG, AllocationIsFeasibleExactly)
{
    for (const auto& m : {example1(), example2()})
        for (double d0 : {0.0, 0.07, 0.2, 0.33})
            for (double d1 : {0.01, 0.15, 0.4}) {
                const auto res = r_g(m, {d0, d1});
                EXPECT_TRUE(allocation_feasible(m, {d0, d1}, res.allocation)) << d0 << "," << d1;
                for (double v : res.allocation.data()) EXPECT_GE(v, 0.0);
            }
}

TEST(RG, AllocationSurvivesPerturbation)
{
    // Moving resolution-sized distortion between two classes of one
    // criterion, at equal weighted mass, never improves the objective.
    std::mt19937_64 rng(8);
    const auto m = random_ternary_model(rng);
    const DistortionBudget b = {0.2, 0.15};
    AllocationOptions opt;
    const auto res = r_g(m, b, opt);
    const double base = allocation_objective(m, res.allocation);
    EXPECT_NEAR(base, res.rate, 1e-5);
    const auto cd = detail::class_data(m);
    int tried = 0;
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t u : cd.labels)
            for (std::size_t v : cd.labels) {
                if (u == v) continue;
                DistortionAllocation a = res.allocation;
                a(l, u) -= opt.resolution;
                a(l, v) += opt.resolution * cd.joint_mass(l, u) / cd.joint_mass(l, v);
                if (a(l, u) < 0.0) continue;
                // Round-off in the compensation may leave the row a hair over.
                const double over = cd.joint_mass(l, u) * a(l, u) + cd.joint_mass(l, v) * a(l, v) -
                                    cd.joint_mass(l, u) * res.allocation(l, u) -
                                    cd.joint_mass(l, v) * res.allocation(l, v);
                if (over > 0.0) a(l, v) -= 2.0 * over / cd.joint_mass(l, v);
                if (!allocation_feasible(m, b, a)) continue;
                ++tried;
                EXPECT_GE(allocation_objective(m, a), base - 1e-6) << l << " " << u << "->" << v;
            }
    EXPECT_GT(tried, 0);
}

TEST(RC, AugmentedFormulationAgrees)
{
    const auto m1 = example1();
    EXPECT_NEAR(r_c_augmented(m1, {0.25, 0.25}).rate, r_c(m1, {0.25, 0.25}), 1e-3);
    const auto m2 = example2();
    for (const DistortionBudget& b : std::vector<DistortionBudget>{{0.0, 0.0}, {0.1, 0.1}, {0.3, 0.05}})
        EXPECT_NEAR(r_c_augmented(m2, b).rate, r_c(m2, b), 1e-3);
    std::mt19937_64 rng(99);
    const auto m3 = random_ternary_model(rng);
    EXPECT_NEAR(r_c_augmented(m3, {0.1, 0.2}).rate, r_c(m3, {0.1, 0.2}), 1e-3);
}

TEST(RC, ExceedsRStarByAtMostLabelEntropy)
{
    const auto m = example2();
    EXPECT_NEAR(r_star(m, {0.0, 0.0}).rate, 2.0, 1e-3);
    EXPECT_NEAR(r_c(m, {0.0, 0.0}), 2.0, 1e-3);
    EXPECT_NEAR(r_g(m, {0.0, 0.0}).rate, 1.0, 1e-3);
}

TEST(GapSweep, SingleClassHasNoGap)
{
    const auto m = test::single_class_model({0.4, 0.6}, hamming_distortion(2, 2));
    const auto rep = gap_sweep(m, {{0.05}, {0.25}, {0.5}});
    EXPECT_EQ(rep.label_entropy, 0.0);
    for (const auto& row : rep.rows) {
        EXPECT_EQ(row.status, "ok");
        EXPECT_NEAR(row.gap_c(), 0.0, 1e-6);
        EXPECT_NEAR(row.gap_g(), 0.0, 1e-6);
    }
    EXPECT_NEAR(rep.rows[1].r_star, binary_entropy(0.4) - binary_entropy(0.25), 1e-3);
}

TEST(GapSweep, CsvLayoutAndFailureStatus)
{
    auto m = example2();
    for (auto& c : m.criteria)
        for (double& v : c.distortion.data()) v += 0.1;
    const auto rep = gap_sweep(m, {{0.05, 0.2}, {0.3, 0.3}});
    EXPECT_EQ(rep.rows[0].status, "Infeasible");
    EXPECT_EQ(rep.rows[1].status, "ok");
    const auto csv = to_csv(rep);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "D_0,D_1,R_star,R_C,R_G,gap_C,gap_G,status");
    EXPECT_NE(csv.find("nan,nan,nan,nan,nan,Infeasible"), std::string::npos);
    EXPECT_CRD_ERROR(gap_sweep(m, {}), ErrorCode::InvalidArgument);
}
