#pragma once

// Compound integer representation: for j = 1 b_{k-1} ... b_0 in binary,
// gamma(j) = 0 b_{k-1} 0 b_{k-2} ... 0 b_0 1, so |gamma(j)| = 2k + 1.
// A 0 announces a data bit, a 1 ends the word; no codeword is a prefix of
// another.

#include <bit>
#include <cstdint>
#include <utility>

#include "crd/codec/bits.hpp"

namespace crd {

inline void gamma_append(BitString& out, std::uint64_t j)
{
    if (j == 0) throw Error(ErrorCode::ZeroOrNegative, "gamma is defined for j >= 1");
    const int k = 63 - std::countl_zero(j);
    for (int b = k - 1; b >= 0; --b) {
        out.push_back(false);
        out.push_back((j >> b) & 1u);
    }
    out.push_back(true);
}

inline BitString gamma_encode(std::uint64_t j)
{
    BitString b;
    gamma_append(b, j);
    return b;
}

inline std::size_t gamma_length(std::uint64_t j)
{
    if (j == 0) throw Error(ErrorCode::ZeroOrNegative, "gamma is defined for j >= 1");
    return 1 + 2 * static_cast<std::size_t>(63 - std::countl_zero(j));
}

/// Reads one codeword from the reader.
inline std::uint64_t gamma_read(BitReader& in)
{
    std::uint64_t j = 1;
    for (;;) {
        if (in.at_end()) throw Error(ErrorCode::Truncated, "incomplete gamma codeword");
        if (in.read()) return j;
        if (in.at_end()) throw Error(ErrorCode::Truncated, "incomplete gamma codeword");
        if (j >> 63) throw Error(ErrorCode::MalformedStream, "gamma codeword exceeds 64 bits");
        j = (j << 1) | (in.read() ? 1u : 0u);
    }
}

/// (j, remainder) with gamma(j) ++ remainder == b.
inline std::pair<std::uint64_t, BitString> gamma_decode(const BitString& b)
{
    BitReader in(b);
    const std::uint64_t j = gamma_read(in);
    return {j, in.rest()};
}

} // namespace crd
