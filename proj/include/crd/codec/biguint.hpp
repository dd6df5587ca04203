#pragma once

// Unsigned integers of arbitrary width, enough for block-code indices
// (mixed-radix products of per-block indices) and fixed-width writes.

#include <algorithm>
#include <bit>
#include <cmath>
#include <compare>
#include <cstdint>
#include <vector>

#include "crd/codec/bits.hpp"

namespace crd {

__extension__ using Wide = unsigned __int128;

class BigUint {
public:
    BigUint() = default;
    BigUint(std::uint64_t v)  // NOLINT: implicit from small values is convenient
    {
        if (v != 0) limbs_.push_back(v);
    }

    bool is_zero() const noexcept { return limbs_.empty(); }

    std::size_t bit_length() const noexcept
    {
        if (limbs_.empty()) return 0;
        return 64 * (limbs_.size() - 1) + (64 - static_cast<std::size_t>(std::countl_zero(limbs_.back())));
    }

    bool bit(std::size_t i) const noexcept
    {
        const std::size_t limb = i / 64;
        return limb < limbs_.size() && ((limbs_[limb] >> (i % 64)) & 1u);
    }

    /// *this = *this * m + a
    void mul_add(std::uint64_t m, std::uint64_t a)
    {
        Wide carry = a;
        for (auto& l : limbs_) {
            const Wide t = static_cast<Wide>(l) * m + carry;
            l = static_cast<std::uint64_t>(t);
            carry = t >> 64;
        }
        if (carry != 0) limbs_.push_back(static_cast<std::uint64_t>(carry));
        trim();
    }

    /// Divides in place by d > 0 and returns the remainder.
    std::uint64_t div_mod(std::uint64_t d)
    {
        Wide rem = 0;
        for (std::size_t i = limbs_.size(); i-- > 0;) {
            const Wide cur = (rem << 64) | limbs_[i];
            limbs_[i] = static_cast<std::uint64_t>(cur / d);
            rem = cur % d;
        }
        trim();
        return static_cast<std::uint64_t>(rem);
    }

    std::uint64_t low64() const noexcept { return limbs_.empty() ? 0 : limbs_.front(); }

    /// log2 of the value (-inf for zero), accurate to double precision.
    double log2() const
    {
        if (limbs_.empty()) return -INFINITY;
        const std::size_t bits = bit_length();
        if (bits <= 64) return std::log2(static_cast<double>(limbs_.front()));
        // Top 64 bits plus the shift.
        const std::size_t shift = bits - 64;
        std::uint64_t top = 0;
        for (std::size_t k = 0; k < 64; ++k) top |= static_cast<std::uint64_t>(bit(shift + k)) << k;
        return std::log2(static_cast<double>(top)) + static_cast<double>(shift);
    }

    void append_bits(BitString& out, std::size_t width) const
    {
        for (std::size_t k = width; k-- > 0;) out.push_back(bit(k));
    }

    static BigUint read_bits(BitReader& in, std::size_t width)
    {
        BigUint v;
        for (std::size_t k = 0; k < width; ++k) v.mul_add(2, in.read() ? 1 : 0);
        return v;
    }

    friend auto operator<=>(const BigUint& a, const BigUint& b)
    {
        if (a.limbs_.size() != b.limbs_.size()) return a.limbs_.size() <=> b.limbs_.size();
        for (std::size_t i = a.limbs_.size(); i-- > 0;)
            if (a.limbs_[i] != b.limbs_[i]) return a.limbs_[i] <=> b.limbs_[i];
        return std::strong_ordering::equal;
    }
    bool operator==(const BigUint&) const = default;

private:
    void trim()
    {
        while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
    }

    std::vector<std::uint64_t> limbs_;  // little-endian
};

} // namespace crd
