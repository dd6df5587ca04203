#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "crd/codec/codes.hpp"
#include "crd/example_sources.hpp"
#include "codec_instances.hpp"
#include "test_support.hpp"

using namespace crd;

namespace {

BlockCode binary_block(std::size_t n) { return test::radix_block(n, 2); }

using test::random_sequence;
using test::residue_code;

double entropy(std::span<const double> p)
{
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log2(v);
    return h;
}

} // namespace

TEST(Vlc, FixedLengthFamilyLength)
{
    const auto code = vlc_from_blocks(binary_block, 1.0);
    const Sequence x{1, 0, 1, 1};
    const auto f = code.encode(x);
    // gamma(4) is 5 bits, then 4 index bits.
    EXPECT_EQ(f.to_string(), "00001" "1011");
    EXPECT_EQ(code.decode(f), x);
}

TEST(Vlc, ConstantDecoderAtRateZero)
{
    BlockFamily one = [](std::size_t n) {
        BlockCode bc;
        bc.length = n;
        bc.index_bound = BigUint(1);
        bc.encode = [](std::span<const Symbol>) { return BigUint(); };
        bc.decode = [n](const BigUint&) { return Sequence(n, 3); };
        return bc;
    };
    const auto code = vlc_from_blocks(one, 0.0);
    for (std::size_t n : {1u, 2u, 7u, 1000u}) {
        const auto f = code.encode(Sequence(n, 1));
        EXPECT_LE(static_cast<double>(f.size()), 1.0 + 2.0 * std::log2(static_cast<double>(n)));
        EXPECT_EQ(code.decode(f), Sequence(n, 3));
    }
}

TEST(Vlc, EmptyAndRateViolation)
{
    const auto code = vlc_from_blocks(binary_block, 1.0);
    EXPECT_TRUE(code.encode(Sequence{}).empty());
    EXPECT_TRUE(code.decode(BitString{}).empty());
    const auto tight = vlc_from_blocks(binary_block, 0.5);
    EXPECT_CRD_ERROR(tight.encode(Sequence{0, 1}), ErrorCode::RateViolated);
    EXPECT_CRD_ERROR(vlc_from_blocks(binary_block, -1.0), ErrorCode::InvalidArgument);
}

TEST(Vlc, LengthBound)
{
    std::mt19937_64 rng(41);
    const double rate = std::log2(3.0);
    std::vector<BlockCode> parts{BlockCode{}};
    for (std::size_t r = 1; r <= 3; ++r) parts.push_back(test::radix_block(r, 3));
    const auto code = vlc_from_blocks(product_family(parts), rate);
    for (int k = 0; k < 500; ++k) {
        const auto x = random_sequence(rng, 1 + rng() % 200, 3);
        const auto f = code.encode(x);
        const double n = static_cast<double>(x.size());
        ASSERT_LT(static_cast<double>(f.size()), 2.0 + 2.0 * std::log2(n) + n * rate);
        ASSERT_EQ(code.decode(f), x);
    }
}

TEST(Vlc, MalformedStreams)
{
    const auto code = vlc_from_blocks(binary_block, 1.0);
    auto f = code.encode(Sequence{1, 0, 1});
    EXPECT_CRD_ERROR(code.decode(f.slice(0, f.size() - 1)), ErrorCode::MalformedStream);
    f.push_back(false);
    EXPECT_CRD_ERROR(code.decode(f), ErrorCode::MalformedStream);
    EXPECT_CRD_ERROR(code.decode(BitString::from_string("000")), ErrorCode::MalformedStream);
}

TEST(ProductFamily, Validation)
{
    EXPECT_CRD_ERROR(product_family({}), ErrorCode::InvalidArgument);
    EXPECT_CRD_ERROR(product_family({BlockCode{}, binary_block(2)}), ErrorCode::InvalidArgument);
}

TEST(IdentityCode, RoundTripAndLayout)
{
    const auto code = identity_code(3);
    EXPECT_EQ(code.encode(Sequence{2, 0}).to_string(), "011" "10" "00");
    EXPECT_EQ(code.encode(Sequence{}).to_string(), "1");
    std::mt19937_64 rng(3);
    for (int k = 0; k < 500; ++k) {
        const auto x = random_sequence(rng, rng() % 50, 3);
        ASSERT_EQ(code.decode(code.encode(x)), x);
    }
    EXPECT_CRD_ERROR(code.encode(Sequence{3}), ErrorCode::InvalidArgument);
    EXPECT_CRD_ERROR(code.decode(BitString::from_string("01110")), ErrorCode::MalformedStream);
    EXPECT_CRD_ERROR(identity_code(0), ErrorCode::EmptyAlphabet);
}

TEST(GammaLengthCode, SelfDelimiting)
{
    const auto code = gamma_length_code(2);
    EXPECT_EQ(code.encode(Sequence{0, 1, 1}).to_string(), "00001");
    EXPECT_EQ(code.decode(BitString::from_string("00001")), Sequence(3, 2));
    EXPECT_TRUE(code.decode(BitString::from_string("1")).empty());
    EXPECT_CRD_ERROR(code.decode(BitString::from_string("0000110")), ErrorCode::MalformedStream);
}

TEST(LabelCode, UniformBinaryRate)
{
    const std::vector<double> pmf{0.5, 0.5};
    const auto code = lossless_label_code(pmf);
    std::mt19937_64 rng(1);
    const std::size_t n = 100000;
    const auto u = random_sequence(rng, n, 2);
    const auto f = code.encode(u);
    const double rate = static_cast<double>(f.size()) / n;
    EXPECT_GE(rate, 0.95);
    EXPECT_LE(rate, 1.05);
    EXPECT_NEAR(rate, entropy(pmf), 0.05);
    EXPECT_EQ(code.decode(f), u);
}

TEST(LabelCode, SkewedRateTracksEntropy)
{
    const std::vector<double> pmf{0.9, 0.1};
    const auto code = lossless_label_code(pmf);
    std::mt19937_64 rng(2);
    Sequence u(100000);
    for (auto& s : u) s = test::uniform(rng) < 0.1 ? 1 : 0;
    const auto f = code.encode(u);
    EXPECT_NEAR(static_cast<double>(f.size()) / u.size(), entropy(pmf), 0.05);
    EXPECT_EQ(code.decode(f), u);
}

TEST(LabelCode, DeterministicLabelCostsAlmostNothing)
{
    const std::vector<double> pmf{1.0, 0.0};
    const auto code = lossless_label_code(pmf);
    for (std::size_t n : {10000u, 100000u}) {
        const Sequence u(n, 0);
        const auto f = code.encode(u);
        EXPECT_LE(static_cast<double>(f.size()) / n, 0.01) << n;
        EXPECT_EQ(code.decode(f), u);
    }
    const std::vector<double> one{1.0};
    EXPECT_EQ(lossless_label_code(one).decode(lossless_label_code(one).encode(Sequence(50000, 0))), Sequence(50000, 0));
}

TEST(LabelCode, RandomRoundTrips)
{
    std::mt19937_64 rng(12);
    for (int k = 0; k < 1000; ++k) {
        const std::size_t nu = 1 + rng() % 5;
        std::vector<double> pmf(nu);
        double total = 0.0;
        for (auto& p : pmf) total += p = rng() % 4 == 0 ? 0.0 : test::uniform(rng, 0.01, 1.0);
        if (total == 0.0) pmf[0] = total = 1.0;
        for (auto& p : pmf) p /= total;
        const auto code = lossless_label_code(pmf);
        // Zero-probability labels still round trip; they just cost more.
        const auto u = random_sequence(rng, rng() % 300, nu);
        ASSERT_EQ(code.decode(code.encode(u)), u) << k;
    }
    const std::vector<double> pmf{0.5, 0.5};
    EXPECT_TRUE(lossless_label_code(pmf).encode(Sequence{}).empty());
    EXPECT_TRUE(lossless_label_code(pmf).decode(BitString{}).empty());
}

TEST(LabelBased, HandExample)
{
    // x = (a, b, a) with a = 0, b = 1; labels (0, 1, 0).
    const auto lb = assemble_label_based({identity_code(2), identity_code(2)}, {true, true}, {0, 1});
    const Sequence x{0, 1, 0}, u{0, 1, 0};
    const auto f0 = identity_code(2).encode(Sequence{0, 0});
    const auto f1 = identity_code(2).encode(Sequence{1});
    const auto expected = gamma_encode(f0.size() + 1) + f0 + gamma_encode(f1.size() + 1) + f1;
    const auto f = lb.encode(x, u);
    EXPECT_EQ(f, expected);
    EXPECT_EQ(lb.decode(f, u), x);
}

TEST(LabelBased, EmptyAndSingleClass)
{
    const auto lb = assemble_label_based({identity_code(4)}, {true}, {0});
    EXPECT_TRUE(lb.encode(Sequence{}, Sequence{}).empty());
    EXPECT_TRUE(lb.decode(BitString{}, Sequence{}).empty());
    const Sequence x{3, 1, 2, 2};
    const auto payload = identity_code(4).encode(x);
    EXPECT_EQ(lb.encode(x, Sequence(4, 0)), gamma_encode(payload.size() + 1) + payload);
}

TEST(LabelBased, InactiveClassesAreSelfDelimiting)
{
    const auto lb = assemble_label_based({identity_code(3), gamma_length_code(1)}, {true, false}, {1, 0});
    const Sequence x{2, 0, 1}, u{0, 1, 0};
    const auto payload = identity_code(3).encode(Sequence{2, 1});
    const auto f = lb.encode(x, u);
    EXPECT_EQ(f, gamma_encode(2) + gamma_encode(payload.size() + 1) + payload);
    EXPECT_EQ(lb.decode(f, u), (Sequence{2, 1, 1}));
}

TEST(LabelBased, Errors)
{
    EXPECT_CRD_ERROR(assemble_label_based({identity_code(2)}, {true, false}, {0}), ErrorCode::ShapeMismatch);
    EXPECT_CRD_ERROR(assemble_label_based({identity_code(2), identity_code(2)}, {true, true}, {0, 0}),
                     ErrorCode::InvalidArgument);
    const auto lb = assemble_label_based({identity_code(2), identity_code(2)}, {true, true}, {0, 1});
    EXPECT_CRD_ERROR(lb.encode(Sequence{0, 1}, Sequence{0}), ErrorCode::LengthMismatch);
    const Sequence x{0, 1, 1}, u{0, 1, 1};
    auto f = lb.encode(x, u);
    EXPECT_CRD_ERROR(lb.decode(f.slice(0, f.size() - 2), u), ErrorCode::MalformedStream);
    f.push_back(true);
    EXPECT_CRD_ERROR(lb.decode(f, u), ErrorCode::MalformedStream);
    // Decoding under labels with a different class split.
    EXPECT_CRD_ERROR(lb.decode(lb.encode(x, u), Sequence{0, 0, 1}), ErrorCode::MalformedStream);
}

TEST(Ctc, EmptyInput)
{
    const std::vector<double> pmf{0.5, 0.5};
    const auto ctc = assemble_ctc(lossless_label_code(pmf),
                                  assemble_label_based({identity_code(4), identity_code(4)}, {true, true}, {0, 1}),
                                  example2().classifier);
    const auto f = ctc.code.encode(Sequence{});
    EXPECT_EQ(f.to_string(), "1");
    EXPECT_TRUE(ctc.code.decode(f).empty());
    EXPECT_TRUE(ctc.labels(f).empty());
}

TEST(Ctc, RandomizedInvariants)
{
    std::mt19937_64 rng(2024);
    for (int k = 0; k < 10000; ++k) {
        const std::size_t nx = 1 + rng() % 5, nu = 1 + rng() % 3;
        Classifier cls;
        for (std::size_t u = 0; u < nu; ++u) cls.labels.push_back(std::to_string(u));
        for (std::size_t x = 0; x < nx; ++x) cls.map.push_back(rng() % nu);
        std::vector<double> pmf(nu, 1.0 / static_cast<double>(nu));
        std::vector<VariableLengthCode> per_class;
        std::vector<bool> active;
        for (std::size_t u = 0; u < nu; ++u) {
            switch (rng() % 3) {
            case 0: per_class.push_back(identity_code(nx)); active.push_back(true); break;
            case 1: per_class.push_back(residue_code(1 + rng() % 3)); active.push_back(true); break;
            default: per_class.push_back(gamma_length_code(static_cast<Symbol>(rng() % nx))); active.push_back(false);
            }
        }
        std::vector<std::size_t> order(nu);
        for (std::size_t u = 0; u < nu; ++u) order[u] = u;
        std::shuffle(order.begin(), order.end(), rng);
        const auto lb = assemble_label_based(per_class, active, order);
        const auto label_code = lossless_label_code(pmf);
        const auto ctc = assemble_ctc(label_code, lb, cls);

        const auto x = random_sequence(rng, rng() % 30, nx);
        Sequence u(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) u[i] = static_cast<Symbol>(cls(x[i]));

        const auto f2 = ctc.code.encode(x);
        const auto f1 = lb.encode(x, u);
        ASSERT_EQ(ctc.labels(f2), u) << k;
        const auto out = ctc.code.decode(f2);
        ASSERT_EQ(out, lb.decode(f1, u)) << k;
        // Layout: gamma(|f_L| + 1) ++ f_L ++ f_1.
        const auto fl = label_code.encode(u);
        ASSERT_EQ(f2, gamma_encode(fl.size() + 1) + fl + f1) << k;
        // Per-class factorisation.
        for (std::size_t c = 0; c < nu; ++c) {
            Sequence xs, ys;
            for (std::size_t i = 0; i < x.size(); ++i)
                if (u[i] == c) {
                    xs.push_back(x[i]);
                    ys.push_back(out[i]);
                }
            ASSERT_EQ(ctc.per_class(xs, static_cast<Symbol>(c)), ys) << k;
        }
    }
}

TEST(Ctc, OneBitPerClassOnQuaternaryExample)
{
    const auto m = example2();
    const std::vector<double> pmf{0.5, 0.5};
    const auto ctc = assemble_ctc(lossless_label_code(pmf),
                                  assemble_label_based({residue_code(2, 0), residue_code(2, 2)}, {true, true}, {0, 1}),
                                  m.classifier);
    std::mt19937_64 rng(5);
    const auto x = random_sequence(rng, 100000, 4);
    const auto f = ctc.code.encode(x);
    EXPECT_NEAR(static_cast<double>(f.size()) / x.size(), 2.0, 0.05);
    EXPECT_EQ(ctc.code.decode(f), x);
}

TEST(Ctc, MalformedStreams)
{
    const std::vector<double> pmf{0.5, 0.5};
    const auto ctc = assemble_ctc(lossless_label_code(pmf),
                                  assemble_label_based({identity_code(4), identity_code(4)}, {true, true}, {0, 1}),
                                  example2().classifier);
    EXPECT_CRD_ERROR(ctc.code.decode(BitString::from_string("0001")), ErrorCode::MalformedStream);
    const auto f = ctc.code.encode(Sequence{0, 3, 2, 1});
    EXPECT_CRD_ERROR(ctc.code.decode(f.slice(0, f.size() - 1)), ErrorCode::MalformedStream);
    EXPECT_CRD_ERROR(ctc.code.encode(Sequence{4}), ErrorCode::InvalidArgument);
}
