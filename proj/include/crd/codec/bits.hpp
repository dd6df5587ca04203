#pragma once

// Bit strings and the CRD1 container.
//
// Container layout: "CRD1", bit length as u64 little-endian, then the bits
// packed most-significant-first with zero padding in the last byte.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crd/error.hpp"

namespace crd {

class BitString {
public:
    BitString() = default;

    static BitString from_string(std::string_view s)
    {
        BitString b;
        for (char ch : s) {
            if (ch != '0' && ch != '1') throw Error(ErrorCode::InvalidArgument, "bit strings contain only 0 and 1");
            b.push_back(ch == '1');
        }
        return b;
    }

    std::size_t size() const noexcept { return bits_.size(); }
    bool empty() const noexcept { return bits_.empty(); }
    bool operator[](std::size_t i) const { return bits_[i] != 0; }

    void push_back(bool bit) { bits_.push_back(bit ? 1 : 0); }
    void append(const BitString& other) { bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end()); }

    /// Appends the low `width` bits of v, most significant first.
    void append_uint(std::uint64_t v, unsigned width)
    {
        for (unsigned k = width; k-- > 0;) push_back((v >> k) & 1u);
    }

    BitString slice(std::size_t begin, std::size_t count) const
    {
        if (begin + count > size()) throw Error(ErrorCode::Truncated, "slice runs past the end");
        BitString b;
        b.bits_.assign(bits_.begin() + static_cast<std::ptrdiff_t>(begin),
                       bits_.begin() + static_cast<std::ptrdiff_t>(begin + count));
        return b;
    }

    std::string to_string() const
    {
        std::string s;
        s.reserve(size());
        for (auto b : bits_) s.push_back(b ? '1' : '0');
        return s;
    }

    friend BitString operator+(BitString a, const BitString& b)
    {
        a.append(b);
        return a;
    }
    bool operator==(const BitString&) const = default;

private:
    std::vector<std::uint8_t> bits_;
};

/// Sequential reader over a bit string.
class BitReader {
public:
    explicit BitReader(const BitString& bits, std::size_t pos = 0) : bits_(&bits), pos_(pos) {}

    bool at_end() const noexcept { return pos_ >= bits_->size(); }
    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bits_->size() - pos_; }

    bool read()
    {
        if (at_end()) throw Error(ErrorCode::Truncated, "bit stream ended early");
        return (*bits_)[pos_++];
    }

    BitString take(std::size_t count)
    {
        BitString b = bits_->slice(pos_, count);
        pos_ += count;
        return b;
    }

    BitString rest() const { return bits_->slice(pos_, bits_->size() - pos_); }

private:
    const BitString* bits_;
    std::size_t pos_;
};

inline constexpr std::string_view kContainerMagic = "CRD1";

inline std::string write_container(const BitString& bits)
{
    std::string out(kContainerMagic);
    std::uint64_t n = bits.size();
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((n >> (8 * k)) & 0xFFu));
    for (std::size_t i = 0; i < bits.size(); i += 8) {
        unsigned byte = 0;
        for (std::size_t j = 0; j < 8; ++j) byte = (byte << 1) | (i + j < bits.size() && bits[i + j] ? 1u : 0u);
        out.push_back(static_cast<char>(byte));
    }
    return out;
}

inline BitString read_container(std::string_view bytes)
{
    if (bytes.size() < 12 || bytes.substr(0, 4) != kContainerMagic)
        throw Error(ErrorCode::MalformedStream, "missing CRD1 header");
    std::uint64_t n = 0;
    for (int k = 0; k < 8; ++k) n |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[4 + k])) << (8 * k);
    const std::size_t payload = bytes.size() - 12;
    if (n > payload * 8 || (n + 7) / 8 != payload)
        throw Error(ErrorCode::MalformedStream, "bit length does not match the payload size");
    BitString b;
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto byte = static_cast<unsigned char>(bytes[12 + i / 8]);
        b.push_back((byte >> (7 - i % 8)) & 1u);
    }
    for (std::uint64_t i = n; i < payload * 8; ++i)
        if ((static_cast<unsigned char>(bytes[12 + i / 8]) >> (7 - i % 8)) & 1u)
            throw Error(ErrorCode::MalformedStream, "padding bits must be zero");
    return b;
}

} // namespace crd
