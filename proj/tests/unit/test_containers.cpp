#include <gtest/gtest.h>

#include <random>

#include "crd/codec/biguint.hpp"
#include "crd/codec/bits.hpp"
#include "test_support.hpp"

using namespace crd;

TEST(BitString, TextAndSlices)
{
    const auto b = BitString::from_string("1011001");
    EXPECT_EQ(b.size(), 7u);
    EXPECT_EQ(b.slice(2, 3).to_string(), "110");
    EXPECT_CRD_ERROR(b.slice(5, 3), ErrorCode::Truncated);
    EXPECT_CRD_ERROR(BitString::from_string("10a"), ErrorCode::InvalidArgument);
    BitString w;
    w.append_uint(5, 4);
    EXPECT_EQ(w.to_string(), "0101");
    BitReader r(b);
    EXPECT_TRUE(r.read());
    EXPECT_EQ(r.take(3).to_string(), "011");
    EXPECT_EQ(r.rest().to_string(), "001");
    EXPECT_EQ(r.remaining(), 3u);
}

TEST(Container, LayoutIsMagicLengthPayload)
{
    const auto bytes = write_container(BitString::from_string("1000000011"));
    ASSERT_EQ(bytes.size(), 4u + 8u + 2u);
    EXPECT_EQ(bytes.substr(0, 4), "CRD1");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 10u);
    for (int k = 5; k < 12; ++k) EXPECT_EQ(bytes[k], '\0');
    EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 0x80u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[13]), 0xC0u);
}

TEST(Container, RoundTripsRandomStrings)
{
    std::mt19937_64 rng(17);
    for (int k = 0; k < 2000; ++k) {
        BitString b;
        for (std::size_t i = rng() % 300; i > 0; --i) b.push_back(rng() & 1u);
        ASSERT_EQ(read_container(write_container(b)), b);
    }
    EXPECT_TRUE(read_container(write_container(BitString{})).empty());
}

TEST(Container, RejectsMalformedInput)
{
    const auto good = write_container(BitString::from_string("10110"));
    EXPECT_CRD_ERROR(read_container("CRD"), ErrorCode::MalformedStream);
    std::string bad_magic = good;
    bad_magic[3] = '2';
    EXPECT_CRD_ERROR(read_container(bad_magic), ErrorCode::MalformedStream);
    EXPECT_CRD_ERROR(read_container(good.substr(0, good.size() - 1)), ErrorCode::MalformedStream);
    EXPECT_CRD_ERROR(read_container(good + '\0'), ErrorCode::MalformedStream);
    std::string dirty = good;
    dirty.back() = static_cast<char>(dirty.back() | 0x01);
    EXPECT_CRD_ERROR(read_container(dirty), ErrorCode::MalformedStream);
}

TEST(BigUint, ArithmeticAndBits)
{
    BigUint v;
    EXPECT_TRUE(v.is_zero());
    EXPECT_EQ(v.bit_length(), 0u);
    // 3^50 overflows 64 bits.
    v = BigUint(1);
    for (int k = 0; k < 50; ++k) v.mul_add(3, 0);
    EXPECT_EQ(v.bit_length(), 80u);
    EXPECT_NEAR(v.log2(), 50 * std::log2(3.0), 1e-9);
    BigUint w = v;
    for (int k = 0; k < 50; ++k) EXPECT_EQ(w.div_mod(3), 0u);
    EXPECT_EQ(w, BigUint(1));
    EXPECT_LT(BigUint(7), v);

    BitString out;
    v.append_bits(out, 90);
    BitReader in(out);
    EXPECT_EQ(BigUint::read_bits(in, 90), v);
    EXPECT_FALSE(out[0]);
}

TEST(BigUint, MixedRadixRoundTrip)
{
    std::mt19937_64 rng(23);
    for (int k = 0; k < 200; ++k) {
        const std::uint64_t radix = 2 + rng() % 300;
        std::vector<std::uint64_t> digits(1 + rng() % 40);
        BigUint acc;
        for (auto& d : digits) acc.mul_add(radix, d = rng() % radix);
        for (std::size_t i = digits.size(); i-- > 0;) ASSERT_EQ(acc.div_mod(radix), digits[i]);
        EXPECT_TRUE(acc.is_zero());
    }
}
