#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "crd/example_sources.hpp"
#include "crd/fidelity.hpp"
#include "test_support.hpp"

using namespace crd;

namespace {

Triple random_triple(std::mt19937_64& rng, std::size_t n, std::size_t ns, std::size_t nx, std::size_t ny)
{
    Triple t;
    for (std::size_t i = 0; i < n; ++i) {
        t.states.push_back(static_cast<Symbol>(rng() % ns));
        t.symbols.push_back(static_cast<Symbol>(rng() % nx));
        t.reproductions.push_back(static_cast<Symbol>(rng() % ny));
    }
    return t;
}

FidelityCriterion random_criterion(std::mt19937_64& rng, std::size_t ns, std::size_t nx, std::size_t ny)
{
    FidelityCriterion c{"c", rng() % 2 ? hamming_distortion(nx, ny) : test::random_matrix(rng, nx, ny, 0.0, 2.0),
                        std::vector<bool>(ns)};
    for (std::size_t s = 0; s < ns; ++s) c.state_subset[s] = rng() % 2 == 1;
    return c;
}

double random_level(std::mt19937_64& rng)
{
    static const double dyadic[] = {0.0, 0.25, 0.5, 1.0};
    return rng() % 2 ? dyadic[rng() % 4] : test::uniform(rng, 0.0, 1.5);
}

const FidelityCriterion kFirst{"0", hamming_distortion(2, 2), {true, false}};

} // namespace

TEST(Meets, VacuousWhenNoPositionIsInTheSubset)
{
    const Triple t{{1, 1}, {0, 1}, {1, 0}};
    EXPECT_TRUE(meets(t, kFirst, 0.0));
    EXPECT_TRUE(meets(Triple{}, kFirst, 0.0));
}

TEST(Meets, SingleMismatchAboveLevel)
{
    EXPECT_FALSE(meets(Triple{{0}, {0}, {1}}, kFirst, 0.5));
    EXPECT_TRUE(meets(Triple{{0}, {0}, {1}}, kFirst, 1.0));
}

TEST(Meets, HandExample)
{
    const Triple t{{0, 1, 0}, {0, 0, 1}, {0, 1, 1}};
    EXPECT_TRUE(meets(t, kFirst, 0.0));
    EXPECT_DOUBLE_EQ(subset_average(t, kFirst), 0.0);
    const FidelityCriterion second{"1", hamming_distortion(2, 2), {false, true}};
    EXPECT_FALSE(meets(t, second, 0.5));
}

TEST(Meets, Errors)
{
    EXPECT_CRD_ERROR(meets(Triple{{0, 1}, {0}, {0, 1}}, kFirst, 0.1), ErrorCode::LengthMismatch);
    EXPECT_CRD_ERROR(meets(Triple{{0}, {0}, {0}}, kFirst, -0.1), ErrorCode::InvalidArgument);
}

TEST(Meets, EqualityCountsAsMet)
{
    // 0.1 + 0.2 - 0.3 is not zero in naive floating point.
    FidelityCriterion c{"c", Matrix::from_rows({{0.1, 0.2, 0.3}}), {true}};
    const Triple t{{0, 0, 0}, {0, 0, 0}, {0, 1, 2}};
    EXPECT_TRUE(meets(t, c, 0.2));
}

TEST(Converted, Examples)
{
    const auto full = converted_distortion(FidelityCriterion{"a", hamming_distortion(2, 3), {true, true}}, 0.3);
    for (std::size_t x = 0; x < 2; ++x)
        for (std::size_t y = 0; y < 3; ++y)
            for (std::size_t s = 0; s < 2; ++s) EXPECT_EQ(full(x, y, s), x == y ? 0.0 : 1.0);

    const auto none = converted_distortion(FidelityCriterion{"b", hamming_distortion(2, 2), {false, false}}, 0.3);
    for (std::size_t x = 0; x < 2; ++x)
        for (std::size_t y = 0; y < 2; ++y)
            for (std::size_t s = 0; s < 2; ++s) EXPECT_EQ(none(x, y, s), 0.3);
    std::mt19937_64 rng(4);
    for (int k = 0; k < 50; ++k) EXPECT_TRUE(none.block_average_meets(random_triple(rng, 1 + rng() % 30, 2, 2, 2)));

    const auto m = example1();
    const auto first = converted_distortion(m.criteria[0], 0.25);
    for (std::size_t x = 0; x < 2; ++x)
        for (std::size_t y = 0; y < 2; ++y) {
            EXPECT_EQ(first(x, y, 0), m.criteria[0].distortion(x, y));
            EXPECT_EQ(first(x, y, 1), 0.25);
        }
}

TEST(Converted, EquivalentToTheBlockTest)
{
    std::mt19937_64 rng(2718);
    int met = 0;
    for (int k = 0; k < 10000; ++k) {
        const std::size_t ns = 1 + rng() % 3, nx = 1 + rng() % 4, ny = 1 + rng() % 4;
        const auto c = random_criterion(rng, ns, nx, ny);
        const double delta = random_level(rng);
        const auto t = random_triple(rng, rng() % 40, ns, nx, ny);
        const bool direct = meets(t, c, delta);
        met += direct;
        EXPECT_EQ(direct, converted_distortion(c, delta).block_average_meets(t)) << k;
    }
    // Both outcomes occur.
    EXPECT_GT(met, 1000);
    EXPECT_LT(met, 9000);
}

TEST(Meets, MonotoneInLevel)
{
    std::mt19937_64 rng(5);
    for (int k = 0; k < 2000; ++k) {
        const auto c = random_criterion(rng, 2, 3, 3);
        const auto t = random_triple(rng, rng() % 25, 2, 3, 3);
        const double lo = random_level(rng), hi = lo + test::uniform(rng, 0.0, 0.5);
        if (meets(t, c, lo)) {
            EXPECT_TRUE(meets(t, c, hi));
        }
    }
}

TEST(Meets, InvariantUnderCommonPermutation)
{
    std::mt19937_64 rng(6);
    for (int k = 0; k < 2000; ++k) {
        const auto c = random_criterion(rng, 3, 3, 2);
        const auto t = random_triple(rng, rng() % 25, 3, 3, 2);
        std::vector<std::size_t> perm(t.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Triple p;
        for (std::size_t i : perm) {
            p.states.push_back(t.states[i]);
            p.symbols.push_back(t.symbols[i]);
            p.reproductions.push_back(t.reproductions[i]);
        }
        const double delta = subset_average(t, c);
        for (double level : {delta, 0.9 * delta, random_level(rng)})
            EXPECT_EQ(meets(t, c, level), meets(p, c, level));
    }
}

TEST(Combine, EqualLevelsAllMeeting)
{
    // Class 0 holds positions {0, 2}, class 1 holds {1, 3}.
    const ClassPart a{{0, 2}, Triple{{0, 0}, {0, 1}, {0, 1}}, 0.5};
    const ClassPart b{{1, 3}, Triple{{0, 1}, {1, 0}, {1, 1}}, 0.5};
    const auto v = combine_check({a, b}, kFirst, 0.5);
    EXPECT_EQ(v.predicted, CombineOutcome::Meets);
    EXPECT_TRUE(v.merged_meets);
    EXPECT_TRUE(v.witness.empty());
}

TEST(Combine, EmptySubsetMeetsVacuously)
{
    const ClassPart a{{1, 0}, Triple{{1, 1}, {0, 1}, {1, 0}}, 0.0};
    const auto v = combine_check({a}, kFirst, 0.0);
    EXPECT_TRUE(v.merged_meets);
    EXPECT_EQ(v.predicted, CombineOutcome::Meets);
}

TEST(Combine, BothDirectionsOnRandomPartitions)
{
    std::mt19937_64 rng(77);
    int positive = 0, negative = 0;
    for (int k = 0; k < 3000; ++k) {
        const std::size_t nu = 1 + rng() % 3, n = 1 + rng() % 40;
        const auto c = random_criterion(rng, 2, 3, 3);
        const auto merged = random_triple(rng, n, 2, 3, 3);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<ClassPart> parts(nu);
        for (std::size_t i : order) {
            auto& p = parts[rng() % nu];
            p.positions.push_back(i);
            p.triple.states.push_back(merged.states[i]);
            p.triple.symbols.push_back(merged.symbols[i]);
            p.triple.reproductions.push_back(merged.reproductions[i]);
        }
        // Levels straddle each class's own average so both hypotheses occur.
        for (auto& p : parts) p.delta = std::max(0.0, subset_average(p.triple, c) + test::uniform(rng, -0.3, 0.3));
        const double delta = std::max(0.0, subset_average(merged, c) + test::uniform(rng, -0.3, 0.3));
        const auto v = combine_check(parts, c, delta);
        if (v.predicted == CombineOutcome::Meets) {
            ++positive;
            EXPECT_TRUE(v.merged_meets) << k;
        } else if (v.predicted == CombineOutcome::DoesNotMeet) {
            ++negative;
            EXPECT_FALSE(v.merged_meets) << k;
        } else {
            EXPECT_FALSE(v.witness.empty());
        }
    }
    EXPECT_GT(positive, 100);
    EXPECT_GT(negative, 100);
}

TEST(Combine, ExplicitNegativeDirection)
{
    // Each class misses its level and the weighted levels reach delta.
    const ClassPart a{{0, 1}, Triple{{0, 0}, {0, 1}, {1, 1}}, 0.25};  // average 0.5
    const ClassPart b{{2, 3}, Triple{{0, 0}, {0, 0}, {1, 1}}, 0.75};  // average 1
    const auto v = combine_check({a, b}, kFirst, 0.5);
    EXPECT_EQ(v.predicted, CombineOutcome::DoesNotMeet);
    EXPECT_FALSE(v.merged_meets);
    EXPECT_EQ(v.failing_classes, (std::vector<std::size_t>{0, 1}));
}

TEST(Combine, RejectsOverlapAndGaps)
{
    const ClassPart a{{0, 1}, Triple{{0, 0}, {0, 1}, {1, 1}}, 0.25};
    const ClassPart b{{1, 2}, Triple{{0, 0}, {0, 0}, {1, 1}}, 0.75};
    EXPECT_CRD_ERROR(combine_check({a, b}, kFirst, 0.5), ErrorCode::NotAPartition);
    const ClassPart gap{{0, 5}, Triple{{0, 0}, {0, 1}, {1, 1}}, 0.25};
    EXPECT_CRD_ERROR(combine_check({gap}, kFirst, 0.5), ErrorCode::NotAPartition);
    const ClassPart ragged{{0}, Triple{{0, 0}, {0, 1}, {1, 1}}, 0.25};
    EXPECT_CRD_ERROR(combine_check({ragged}, kFirst, 0.5), ErrorCode::NotAPartition);
}
