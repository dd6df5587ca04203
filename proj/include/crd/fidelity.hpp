#pragma once

// Fidelity criteria evaluated on realised sequences (s, x, x^): the block
// test, its single-measure form d_{l,delta}, and the class-merging check.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "crd/error.hpp"
#include "crd/model.hpp"

namespace crd {

struct Triple {
    std::vector<Symbol> states;
    std::vector<Symbol> symbols;
    std::vector<Symbol> reproductions;

    std::size_t size() const noexcept { return states.size(); }

    void validate() const
    {
        if (symbols.size() != states.size() || reproductions.size() != states.size())
            throw Error(ErrorCode::LengthMismatch, "triple sequences differ in length");
    }
};

/// Neumaier's compensated summation.
class CompensatedSum {
public:
    void add(double v) noexcept
    {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) comp_ += (sum_ - t) + v;
        else comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

namespace detail {

inline void check_symbols(const Triple& t, const FidelityCriterion& c)
{
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t.states[i] >= c.state_subset.size() || t.symbols[i] >= c.distortion.rows() ||
            t.reproductions[i] >= c.distortion.cols())
            throw Error(ErrorCode::ShapeMismatch, "triple symbol outside the criterion's alphabets");
}

inline void check_level(double delta)
{
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw Error(ErrorCode::InvalidArgument, "delta must be finite and >= 0");
}

} // namespace detail

/// sum over i with s_i in S* of (d(x_i, x^_i) - delta) <= 0. Equality meets.
inline bool meets(const Triple& t, const FidelityCriterion& c, double delta)
{
    t.validate();
    detail::check_level(delta);
    detail::check_symbols(t, c);
    CompensatedSum acc;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (c.state_subset[t.states[i]]) acc.add(c.distortion(t.symbols[i], t.reproductions[i]) - delta);
    return acc.value() <= 0.0;
}

/// Mean d over the in-subset positions (0 when there are none).
inline double subset_average(const Triple& t, const FidelityCriterion& c)
{
    t.validate();
    detail::check_symbols(t, c);
    CompensatedSum acc;
    std::size_t count = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (c.state_subset[t.states[i]]) {
            acc.add(c.distortion(t.symbols[i], t.reproductions[i]));
            ++count;
        }
    return count == 0 ? 0.0 : acc.value() / static_cast<double>(count);
}

/// d_{l,delta}(x, x^, s): d_l(x, x^) for s in S_l, otherwise delta.
class ConvertedDistortion {
public:
    ConvertedDistortion(const FidelityCriterion& c, double delta)
        : nx_(c.distortion.rows()), ny_(c.distortion.cols()), ns_(c.state_subset.size()), delta_(delta),
          values_(nx_ * ny_ * ns_)
    {
        detail::check_level(delta);
        for (std::size_t x = 0; x < nx_; ++x)
            for (std::size_t y = 0; y < ny_; ++y)
                for (std::size_t s = 0; s < ns_; ++s)
                    values_[(x * ny_ + y) * ns_ + s] = c.state_subset[s] ? c.distortion(x, y) : delta;
    }

    double operator()(std::size_t x, std::size_t y, std::size_t s) const { return values_[(x * ny_ + y) * ns_ + s]; }
    double level() const noexcept { return delta_; }
    std::size_t symbols() const noexcept { return nx_; }
    std::size_t reproductions() const noexcept { return ny_; }
    std::size_t states() const noexcept { return ns_; }

    /// (1/n) sum_i d_{l,delta}(x_i, x^_i, s_i) <= delta, tested as sum <= n delta.
    bool block_average_meets(const Triple& t) const
    {
        t.validate();
        CompensatedSum acc;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t.symbols[i] >= nx_ || t.reproductions[i] >= ny_ || t.states[i] >= ns_)
                throw Error(ErrorCode::ShapeMismatch, "triple symbol outside the tensor");
            acc.add((*this)(t.symbols[i], t.reproductions[i], t.states[i]));
        }
        return acc.value() <= static_cast<double>(t.size()) * delta_;
    }

private:
    std::size_t nx_, ny_, ns_;
    double delta_;
    std::vector<double> values_;
};

inline ConvertedDistortion converted_distortion(const FidelityCriterion& c, double delta)
{
    return ConvertedDistortion(c, delta);
}

/// One class's share of a merged block: its positions in the merged
/// sequence, its triple (in position order), and its level delta_u.
struct ClassPart {
    std::vector<std::size_t> positions;
    Triple triple;
    double delta = 0.0;
};

enum class CombineOutcome {
    Meets,         ///< every class meets and the weighted levels fit under delta
    DoesNotMeet,   ///< no class meets and the weighted levels reach delta
    Undetermined   ///< neither hypothesis holds
};

struct CombineVerdict {
    CombineOutcome predicted = CombineOutcome::Undetermined;
    bool merged_meets = false;
    bool levels_fit = false;                   ///< sum_u |J(u) & J*| delta_u <= |J*| delta
    std::vector<std::size_t> failing_classes;  ///< classes not meeting their delta_u
    std::string witness;                       ///< which hypothesis failed, if any
};

/// Merges class triples at their positions and applies the combining rule.
inline CombineVerdict combine_check(const std::vector<ClassPart>& parts, const FidelityCriterion& c, double delta)
{
    detail::check_level(delta);
    std::size_t n = 0;
    for (const auto& p : parts) {
        p.triple.validate();
        if (p.positions.size() != p.triple.size())
            throw Error(ErrorCode::NotAPartition, "class positions and triple differ in length");
        n += p.positions.size();
    }
    Triple merged;
    merged.states.assign(n, 0);
    merged.symbols.assign(n, 0);
    merged.reproductions.assign(n, 0);
    std::vector<bool> seen(n, false);
    for (const auto& p : parts)
        for (std::size_t k = 0; k < p.positions.size(); ++k) {
            const std::size_t i = p.positions[k];
            if (i >= n || seen[i]) throw Error(ErrorCode::NotAPartition, "class positions do not partition the block");
            seen[i] = true;
            merged.states[i] = p.triple.states[k];
            merged.symbols[i] = p.triple.symbols[k];
            merged.reproductions[i] = p.triple.reproductions[k];
        }

    CombineVerdict v;
    CompensatedSum weighted;
    std::size_t in_subset = 0;
    for (std::size_t u = 0; u < parts.size(); ++u) {
        const auto& p = parts[u];
        detail::check_level(p.delta);
        std::size_t hits = 0;
        for (Symbol s : p.triple.states) {
            if (s >= c.state_subset.size()) throw Error(ErrorCode::ShapeMismatch, "state outside the criterion");
            if (c.state_subset[s]) ++hits;
        }
        in_subset += hits;
        weighted.add(static_cast<double>(hits) * p.delta);
        if (!meets(p.triple, c, p.delta)) v.failing_classes.push_back(u);
    }
    const double cap = static_cast<double>(in_subset) * delta;
    v.levels_fit = weighted.value() <= cap;
    v.merged_meets = meets(merged, c, delta);
    if (v.failing_classes.empty() && v.levels_fit) {
        v.predicted = CombineOutcome::Meets;
    } else if (v.failing_classes.size() == parts.size() && !parts.empty() && weighted.value() >= cap) {
        v.predicted = CombineOutcome::DoesNotMeet;
    } else {
        if (!v.failing_classes.empty())
            v.witness = std::to_string(v.failing_classes.size()) + " class(es) miss their level";
        if (!v.levels_fit) v.witness += std::string(v.witness.empty() ? "" : "; ") + "weighted levels exceed delta";
    }
    return v;
}

} // namespace crd
