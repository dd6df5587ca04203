#include <gtest/gtest.h>

#include <bit>
#include <random>
#include <unordered_set>

#include "crd/codec/gamma.hpp"
#include "test_support.hpp"

using namespace crd;

TEST(Gamma, KnownCodewords)
{
    EXPECT_EQ(gamma_encode(5).to_string(), "00011");
    EXPECT_EQ(gamma_encode(1).to_string(), "1");
    EXPECT_EQ(gamma_encode(2).to_string(), "001");
    EXPECT_EQ(gamma_encode(4).to_string(), "00001");
    EXPECT_EQ(gamma_length(4), 5u);
}

TEST(Gamma, DecodePassesRemainderThrough)
{
    const auto [j, rest] = gamma_decode(BitString::from_string("00011101"));
    EXPECT_EQ(j, 5u);
    EXPECT_EQ(rest.to_string(), "101");
    const auto [one, empty] = gamma_decode(BitString::from_string("1"));
    EXPECT_EQ(one, 1u);
    EXPECT_TRUE(empty.empty());
}

TEST(Gamma, Errors)
{
    EXPECT_CRD_ERROR(gamma_encode(0), ErrorCode::ZeroOrNegative);
    EXPECT_CRD_ERROR(gamma_length(0), ErrorCode::ZeroOrNegative);
    EXPECT_CRD_ERROR(gamma_decode(BitString::from_string("00")), ErrorCode::Truncated);
    EXPECT_CRD_ERROR(gamma_decode(BitString::from_string("0")), ErrorCode::Truncated);
    EXPECT_CRD_ERROR(gamma_decode(BitString{}), ErrorCode::Truncated);
    BitString huge;
    for (int k = 0; k < 64; ++k) huge.append(BitString::from_string("01"));
    huge.push_back(true);
    EXPECT_CRD_ERROR(gamma_decode(huge), ErrorCode::MalformedStream);
}

TEST(Gamma, LengthLaw)
{
    for (std::uint64_t j = 1; j <= (1u << 20); ++j) {
        const std::size_t expected = 1 + 2 * static_cast<std::size_t>(std::bit_width(j) - 1);
        ASSERT_EQ(gamma_encode(j).size(), expected) << j;
        ASSERT_EQ(gamma_length(j), expected) << j;
    }
    EXPECT_EQ(gamma_length(~std::uint64_t{0}), 127u);
}

TEST(Gamma, PrefixFree)
{
    // No proper prefix of any codeword is itself a codeword.
    std::unordered_set<std::string> words;
    for (std::uint64_t j = 1; j <= (1u << 16); ++j) ASSERT_TRUE(words.insert(gamma_encode(j).to_string()).second);
    for (const auto& w : words)
        for (std::size_t len = 1; len < w.size(); ++len) ASSERT_EQ(words.count(w.substr(0, len)), 0u) << w;
}

TEST(Gamma, StreamingRoundTrip)
{
    std::mt19937_64 rng(1234);
    for (int k = 0; k < 100000; ++k) {
        const std::uint64_t j = (rng() >> (rng() % 64)) | 1u;
        const std::uint64_t jj = j + (rng() % 2);  // even values too
        BitString rest;
        for (std::size_t b = rng() % 20; b > 0; --b) rest.push_back(rng() & 1u);
        const auto [got, tail] = gamma_decode(gamma_encode(jj) + rest);
        ASSERT_EQ(got, jj);
        ASSERT_EQ(tail, rest);
    }
}

TEST(Gamma, ConcatenatedStream)
{
    std::mt19937_64 rng(9);
    std::vector<std::uint64_t> values;
    BitString stream;
    for (int k = 0; k < 1000; ++k) {
        values.push_back(1 + rng() % 5000);
        gamma_append(stream, values.back());
    }
    BitReader in(stream);
    for (auto v : values) EXPECT_EQ(gamma_read(in), v);
    EXPECT_TRUE(in.at_end());
}
