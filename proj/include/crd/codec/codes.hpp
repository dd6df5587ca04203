#pragma once

// Variable-length, block, lossless, label-based and classify-then-compress
// codes, and the constructions that build each from the previous ones.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "crd/codec/biguint.hpp"
#include "crd/codec/bits.hpp"
#include "crd/codec/gamma.hpp"
#include "crd/model.hpp"

namespace crd {

using Sequence = std::vector<Symbol>;

/// (f, phi): f maps any finite sequence to bits; |phi(f(x))| = |x|.
struct VariableLengthCode {
    std::function<BitString(std::span<const Symbol>)> encode;
    std::function<Sequence(const BitString&)> decode;
};

/// (f_n, phi_n) on blocks of fixed length with indices in [0, M).
struct BlockCode {
    std::size_t length = 0;
    BigUint index_bound;
    std::function<BigUint(std::span<const Symbol>)> encode;
    std::function<Sequence(const BigUint&)> decode;
};

using BlockFamily = std::function<BlockCode(std::size_t n)>;

namespace detail {

/// ceil(n R), ignoring floating noise below 1e-9.
inline std::size_t index_width(std::size_t n, double rate)
{
    const double w = std::ceil(static_cast<double>(n) * rate - 1e-9);
    return w <= 0.0 ? 0 : static_cast<std::size_t>(w);
}

inline void check_rate(const BlockCode& bc, std::size_t n, double rate)
{
    if (bc.index_bound.is_zero()) throw Error(ErrorCode::InvalidArgument, "block code with no codewords");
    if (bc.index_bound.log2() > static_cast<double>(n) * rate + 1e-9)
        throw Error(ErrorCode::RateViolated, "block code of length " + std::to_string(n) + " has more than 2^(nR) words");
}

} // namespace detail

/// f(x) = gamma(|x|) ++ index of x in ceil(|x| R) bits; the empty sequence
/// maps to the empty string. Throws RateViolated when it meets a length n
/// with M_n > 2^(nR).
inline VariableLengthCode vlc_from_blocks(BlockFamily family, double rate)
{
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw Error(ErrorCode::InvalidArgument, "rate must be finite and >= 0");
    auto fam = std::make_shared<BlockFamily>(std::move(family));
    VariableLengthCode code;
    code.encode = [fam, rate](std::span<const Symbol> x) {
        BitString out;
        if (x.empty()) return out;
        const std::size_t n = x.size();
        const BlockCode bc = (*fam)(n);
        detail::check_rate(bc, n, rate);
        gamma_append(out, n);
        bc.encode(x).append_bits(out, detail::index_width(n, rate));
        return out;
    };
    code.decode = [fam, rate](const BitString& b) {
        if (b.empty()) return Sequence{};
        try {
            BitReader in(b);
            const std::uint64_t n = gamma_read(in);
            const BlockCode bc = (*fam)(n);
            detail::check_rate(bc, n, rate);
            const BigUint index = BigUint::read_bits(in, detail::index_width(n, rate));
            if (!in.at_end()) throw Error(ErrorCode::MalformedStream, "trailing bits after the block index");
            if (!(index < bc.index_bound)) throw Error(ErrorCode::MalformedStream, "block index out of range");
            return bc.decode(index);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Truncated) throw Error(ErrorCode::MalformedStream, e.what());
            throw;
        }
    };
    return code;
}

/// Concatenation of short block codes: a length-n block is split into
/// floor(n/b) blocks of length b and one of length n mod b, with indices
/// combined in mixed radix. `by_length[r]` is the code for length r, 1 <= r <= b.
inline BlockFamily product_family(std::vector<BlockCode> by_length)
{
    if (by_length.size() < 2) throw Error(ErrorCode::InvalidArgument, "need codes for lengths 1..b");
    for (std::size_t r = 1; r < by_length.size(); ++r)
        if (by_length[r].length != r) throw Error(ErrorCode::InvalidArgument, "code lengths must be 1..b in order");
    auto parts = std::make_shared<std::vector<BlockCode>>(std::move(by_length));
    return [parts](std::size_t n) {
        const std::size_t b = parts->size() - 1;
        std::vector<std::size_t> lengths(n / b, b);
        if (n % b != 0) lengths.push_back(n % b);
        BlockCode bc;
        bc.length = n;
        bc.index_bound = 1;
        for (std::size_t len : lengths) bc.index_bound.mul_add((*parts)[len].index_bound.low64(), 0);
        bc.encode = [parts, lengths](std::span<const Symbol> x) {
            BigUint idx;
            std::size_t at = 0;
            for (std::size_t len : lengths) {
                const auto& part = (*parts)[len];
                idx.mul_add(part.index_bound.low64(), part.encode(x.subspan(at, len)).low64());
                at += len;
            }
            return idx;
        };
        bc.decode = [parts, lengths](const BigUint& index) {
            BigUint idx = index;
            std::vector<std::uint64_t> digits(lengths.size());
            for (std::size_t k = lengths.size(); k-- > 0;) digits[k] = idx.div_mod((*parts)[lengths[k]].index_bound.low64());
            Sequence out;
            for (std::size_t k = 0; k < lengths.size(); ++k) {
                auto piece = (*parts)[lengths[k]].decode(BigUint(digits[k]));
                out.insert(out.end(), piece.begin(), piece.end());
            }
            return out;
        };
        return bc;
    };
}

/// f(x) = gamma(|x| + 1); decodes to |x| copies of `fill`.
inline VariableLengthCode gamma_length_code(Symbol fill = 0)
{
    VariableLengthCode code;
    code.encode = [](std::span<const Symbol> x) { return gamma_encode(x.size() + 1); };
    code.decode = [fill](const BitString& b) {
        try {
            auto [j, rest] = gamma_decode(b);
            if (!rest.empty()) throw Error(ErrorCode::MalformedStream, "trailing bits after a length codeword");
            return Sequence(j - 1, fill);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Truncated) throw Error(ErrorCode::MalformedStream, e.what());
            throw;
        }
    };
    return code;
}

/// Identity code over an alphabet of size k: gamma(|x| + 1) then each
/// symbol in ceil(log2 k) bits.
inline VariableLengthCode identity_code(std::size_t alphabet)
{
    if (alphabet == 0) throw Error(ErrorCode::EmptyAlphabet, "identity code needs a non-empty alphabet");
    unsigned width = 0;
    while ((std::size_t{1} << width) < alphabet) ++width;
    VariableLengthCode code;
    code.encode = [alphabet, width](std::span<const Symbol> x) {
        BitString out = gamma_encode(x.size() + 1);
        for (Symbol s : x) {
            if (s >= alphabet) throw Error(ErrorCode::InvalidArgument, "symbol outside the alphabet");
            out.append_uint(s, width);
        }
        return out;
    };
    code.decode = [width](const BitString& b) {
        try {
            BitReader in(b);
            const std::uint64_t n = gamma_read(in) - 1;
            if (in.remaining() != n * width) throw Error(ErrorCode::MalformedStream, "payload length mismatch");
            Sequence out;
            for (std::uint64_t i = 0; i < n; ++i) {
                Symbol s = 0;
                for (unsigned k = 0; k < width; ++k) s = (s << 1) | (in.read() ? 1u : 0u);
                out.push_back(s);
            }
            return out;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Truncated) throw Error(ErrorCode::MalformedStream, e.what());
            throw;
        }
    };
    return code;
}

namespace detail {

/// Integer frequencies summing to 2^16; every symbol gets at least 1 so any
/// sequence is encodable.
inline std::vector<std::uint32_t> quantize_pmf(std::span<const double> pmf)
{
    constexpr std::uint32_t total = 1u << 16;
    const std::size_t k = pmf.size();
    if (k == 0 || k > total / 2) throw Error(ErrorCode::InvalidArgument, "label alphabet size out of range");
    double mass = 0.0;
    for (double p : pmf) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorCode::NegativeEntry, "label pmf entries must be >= 0");
        mass += p;
    }
    if (std::abs(mass - 1.0) > kInputNormTolerance) throw Error(ErrorCode::NonStochastic, "label pmf must sum to 1");
    const double spare = static_cast<double>(total - k);
    std::vector<std::uint32_t> f(k);
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < k; ++i) sum += (f[i] = 1 + static_cast<std::uint32_t>(std::floor(pmf[i] / mass * spare)));
    // Hand the rounding remainder to the most likely symbol (lowest index on ties).
    const std::size_t top = static_cast<std::size_t>(std::max_element(pmf.begin(), pmf.end()) - pmf.begin());
    f[top] += static_cast<std::uint32_t>(total - sum);
    return f;
}

class ArithmeticModel {
public:
    explicit ArithmeticModel(std::span<const double> pmf) : freq_(quantize_pmf(pmf)), cum_(freq_.size() + 1, 0)
    {
        for (std::size_t i = 0; i < freq_.size(); ++i) cum_[i + 1] = cum_[i] + freq_[i];
    }
    std::size_t size() const noexcept { return freq_.size(); }
    std::uint64_t total() const noexcept { return cum_.back(); }
    std::uint64_t lo(std::size_t s) const { return cum_[s]; }
    std::uint64_t hi(std::size_t s) const { return cum_[s + 1]; }
    std::size_t find(std::uint64_t target) const
    {
        return static_cast<std::size_t>(std::upper_bound(cum_.begin(), cum_.end(), target) - cum_.begin()) - 1;
    }

private:
    std::vector<std::uint32_t> freq_;
    std::vector<std::uint64_t> cum_;
};

// 32-bit range coder with carry-free bit output (pending-bit scheme).
inline constexpr std::uint64_t kAcTop = 0xFFFFFFFFull;
inline constexpr std::uint64_t kAcHalf = 0x80000000ull;
inline constexpr std::uint64_t kAcQuarter = 0x40000000ull;

inline void arithmetic_encode(const ArithmeticModel& m, std::span<const Symbol> seq, BitString& out)
{
    std::uint64_t low = 0, high = kAcTop, pending = 0;
    auto emit = [&](bool bit) {
        out.push_back(bit);
        for (; pending > 0; --pending) out.push_back(!bit);
    };
    for (Symbol s : seq) {
        if (s >= m.size()) throw Error(ErrorCode::InvalidArgument, "label outside the alphabet");
        const std::uint64_t range = high - low + 1;
        high = low + range * m.hi(s) / m.total() - 1;
        low = low + range * m.lo(s) / m.total();
        for (;;) {
            if (high < kAcHalf) {
                emit(false);
            } else if (low >= kAcHalf) {
                emit(true);
                low -= kAcHalf;
                high -= kAcHalf;
            } else if (low >= kAcQuarter && high < 3 * kAcQuarter) {
                ++pending;
                low -= kAcQuarter;
                high -= kAcQuarter;
            } else {
                break;
            }
            low <<= 1;
            high = (high << 1) | 1;
        }
    }
    ++pending;
    emit(low >= kAcQuarter);
}

inline Sequence arithmetic_decode(const ArithmeticModel& m, BitReader& in, std::uint64_t n)
{
    auto next = [&]() -> std::uint64_t { return in.at_end() ? 0 : (in.read() ? 1 : 0); };
    std::uint64_t low = 0, high = kAcTop, value = 0;
    for (int k = 0; k < 32; ++k) value = (value << 1) | next();
    Sequence out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::uint64_t range = high - low + 1;
        const std::uint64_t target = ((value - low + 1) * m.total() - 1) / range;
        const std::size_t s = m.find(target);
        if (s >= m.size()) throw Error(ErrorCode::MalformedStream, "arithmetic decoder left the model");
        out.push_back(static_cast<Symbol>(s));
        high = low + range * m.hi(s) / m.total() - 1;
        low = low + range * m.lo(s) / m.total();
        for (;;) {
            if (high < kAcHalf) {
            } else if (low >= kAcHalf) {
                low -= kAcHalf;
                high -= kAcHalf;
                value -= kAcHalf;
            } else if (low >= kAcQuarter && high < 3 * kAcQuarter) {
                low -= kAcQuarter;
                high -= kAcQuarter;
                value -= kAcQuarter;
            } else {
                break;
            }
            low <<= 1;
            high = (high << 1) | 1;
            value = (value << 1) | next();
        }
    }
    return out;
}

} // namespace detail

/// Lossless code for label sequences: gamma(n + 1) followed by a static
/// arithmetic code under the given pmf. The empty sequence maps to the
/// empty string.
inline VariableLengthCode lossless_label_code(std::span<const double> label_pmf)
{
    auto model = std::make_shared<detail::ArithmeticModel>(label_pmf);
    VariableLengthCode code;
    code.encode = [model](std::span<const Symbol> u) {
        BitString out;
        if (u.empty()) return out;
        gamma_append(out, u.size() + 1);
        detail::arithmetic_encode(*model, u, out);
        return out;
    };
    code.decode = [model](const BitString& b) {
        if (b.empty()) return Sequence{};
        try {
            BitReader in(b);
            const std::uint64_t n = gamma_read(in) - 1;
            // Each symbol costs at least log2(2^16 / (2^16 - 1)) > 2^-16 bits.
            if (n > (static_cast<std::uint64_t>(b.size()) + 64) << 16) throw Error(ErrorCode::MalformedStream, "implausible label count");
            return detail::arithmetic_decode(*model, in, n);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Truncated) throw Error(ErrorCode::MalformedStream, e.what());
            throw;
        }
    };
    return code;
}

/// (f, phi) with labels available to both sides.
struct LabelBasedCode {
    std::function<BitString(std::span<const Symbol>, std::span<const Symbol>)> encode;
    std::function<Sequence(const BitString&, std::span<const Symbol>)> decode;
    std::vector<VariableLengthCode> classes;  ///< per-class codes, by label
};

/// Per-class concatenation in `class_order`. For a class with positive
/// probability the block is gamma(|f_u| + 1) ++ f_u(x_J(u)); other classes
/// must use self-delimiting codes (gamma_length_code) and contribute f_u
/// alone. A zero-length block encodes to the empty string.
inline LabelBasedCode assemble_label_based(std::vector<VariableLengthCode> per_class, std::vector<bool> active,
                                           std::vector<std::size_t> class_order)
{
    const std::size_t nu = per_class.size();
    if (active.size() != nu) throw Error(ErrorCode::ShapeMismatch, "one activity flag per class");
    {
        auto sorted = class_order;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i)
            if (sorted.size() != nu || sorted[i] != i)
                throw Error(ErrorCode::InvalidArgument, "class order must list every class once");
    }
    auto classes = std::make_shared<std::vector<VariableLengthCode>>(per_class);
    auto flags = std::make_shared<std::vector<bool>>(std::move(active));
    auto order = std::make_shared<std::vector<std::size_t>>(std::move(class_order));

    LabelBasedCode code;
    code.classes = std::move(per_class);
    code.encode = [classes, flags, order](std::span<const Symbol> x, std::span<const Symbol> u) {
        if (x.size() != u.size()) throw Error(ErrorCode::LengthMismatch, "symbols and labels differ in length");
        BitString out;
        if (x.empty()) return out;
        std::vector<Sequence> groups(classes->size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (u[i] >= classes->size()) throw Error(ErrorCode::InvalidArgument, "label outside the alphabet");
            groups[u[i]].push_back(x[i]);
        }
        for (std::size_t c : *order) {
            const BitString payload = (*classes)[c].encode(groups[c]);
            if ((*flags)[c]) gamma_append(out, payload.size() + 1);
            out.append(payload);
        }
        return out;
    };
    code.decode = [classes, flags, order](const BitString& b, std::span<const Symbol> u) {
        if (u.empty()) {
            if (!b.empty()) throw Error(ErrorCode::MalformedStream, "bits present for an empty block");
            return Sequence{};
        }
        std::vector<std::vector<std::size_t>> where(classes->size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (u[i] >= classes->size()) throw Error(ErrorCode::InvalidArgument, "label outside the alphabet");
            where[u[i]].push_back(i);
        }
        Sequence out(u.size(), 0);
        try {
            BitReader in(b);
            for (std::size_t c : *order) {
                BitString payload;
                if ((*flags)[c]) {
                    const std::uint64_t len = gamma_read(in) - 1;
                    if (len > in.remaining()) throw Error(ErrorCode::MalformedStream, "class payload runs past the end");
                    payload = in.take(len);
                } else {
                    const std::size_t start = in.position();
                    gamma_read(in);
                    payload = b.slice(start, in.position() - start);
                }
                const Sequence rep = (*classes)[c].decode(payload);
                if (rep.size() != where[c].size())
                    throw Error(ErrorCode::MalformedStream, "class decoder returned the wrong length");
                for (std::size_t k = 0; k < rep.size(); ++k) out[where[c][k]] = rep[k];
            }
            if (!in.at_end()) throw Error(ErrorCode::MalformedStream, "trailing bits after the last class");
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Truncated) throw Error(ErrorCode::MalformedStream, e.what());
            throw;
        }
        return out;
    };
    return code;
}

/// Classify-then-compress code: f(x) = gamma(|f_L(u)| + 1) ++ f_L(u) ++
/// f_1(x, u) with u_i = c(x_i).
struct CTCCode {
    VariableLengthCode code;                                          ///< (f, phi)
    std::function<Sequence(const BitString&)> labels;                 ///< psi
    std::function<Sequence(std::span<const Symbol>, Symbol)> per_class;  ///< g
};

inline CTCCode assemble_ctc(VariableLengthCode label_code, LabelBasedCode label_based, Classifier classifier)
{
    auto lc = std::make_shared<VariableLengthCode>(std::move(label_code));
    auto lb = std::make_shared<LabelBasedCode>(std::move(label_based));
    auto cls = std::make_shared<Classifier>(std::move(classifier));

    // Splits f(x) into (f_L(u) bits, f_1 bits).
    auto split = [](const BitString& b) {
        try {
            BitReader in(b);
            const std::uint64_t len = gamma_read(in) - 1;
            if (len > in.remaining()) throw Error(ErrorCode::MalformedStream, "label payload runs past the end");
            BitString head = in.take(len);
            return std::pair{std::move(head), in.rest()};
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Truncated) throw Error(ErrorCode::MalformedStream, e.what());
            throw;
        }
    };

    CTCCode ctc;
    ctc.code.encode = [lc, lb, cls](std::span<const Symbol> x) {
        Sequence u(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] >= cls->map.size()) throw Error(ErrorCode::InvalidArgument, "symbol outside the alphabet");
            u[i] = static_cast<Symbol>((*cls)(x[i]));
        }
        const BitString labels = lc->encode(u);
        BitString out = gamma_encode(labels.size() + 1);
        out.append(labels);
        out.append(lb->encode(x, u));
        return out;
    };
    ctc.labels = [lc, split](const BitString& b) { return lc->decode(split(b).first); };
    ctc.code.decode = [lc, lb, split](const BitString& b) {
        auto [head, body] = split(b);
        const Sequence u = lc->decode(head);
        return lb->decode(body, u);
    };
    ctc.per_class = [lb](std::span<const Symbol> xs, Symbol u) {
        if (u >= lb->classes.size()) throw Error(ErrorCode::InvalidArgument, "label outside the alphabet");
        const auto& c = lb->classes[u];
        return c.decode(c.encode(xs));
    };
    return ctc;
}

} // namespace crd
