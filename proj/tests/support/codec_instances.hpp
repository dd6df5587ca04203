#pragma once

// Small block codes and random inputs shared by the codec tests.

#include <cmath>
#include <random>

#include "crd/codec/codes.hpp"

namespace crd::test {

/// Identity block code of length n over a k-letter alphabet: the index is x
/// read as a base-k number.
inline BlockCode radix_block(std::size_t n, std::uint64_t k)
{
    BlockCode bc;
    bc.length = n;
    bc.index_bound = BigUint(1);
    for (std::size_t i = 0; i < n; ++i) bc.index_bound.mul_add(k, 0);
    bc.encode = [k](std::span<const Symbol> x) {
        BigUint v;
        for (Symbol s : x) v.mul_add(k, s);
        return v;
    };
    bc.decode = [n, k](const BigUint& i) {
        BigUint v = i;
        Sequence out(n);
        for (std::size_t j = n; j-- > 0;) out[j] = static_cast<Symbol>(v.div_mod(k));
        return out;
    };
    return bc;
}

/// Length-1 code with `words` codewords; symbol s maps to s mod words and
/// index i decodes to offset + i. Lossy when the alphabet exceeds `words`.
inline BlockCode residue_letter(std::uint64_t words, Symbol offset = 0)
{
    BlockCode bc;
    bc.length = 1;
    bc.index_bound = BigUint(words);
    bc.encode = [words](std::span<const Symbol> x) { return BigUint(x[0] % words); };
    bc.decode = [offset](const BigUint& i) { return Sequence{static_cast<Symbol>(offset + i.low64())}; };
    return bc;
}

inline VariableLengthCode residue_code(std::uint64_t words, Symbol offset = 0)
{
    return vlc_from_blocks(product_family({BlockCode{}, residue_letter(words, offset)}),
                           std::log2(static_cast<double>(words)));
}

inline Sequence random_sequence(std::mt19937_64& rng, std::size_t n, std::size_t alphabet)
{
    Sequence x(n);
    for (auto& s : x) s = static_cast<Symbol>(rng() % alphabet);
    return x;
}

} // namespace crd::test
