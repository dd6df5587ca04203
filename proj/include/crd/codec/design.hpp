#pragma once

// Fixed-rate nearest-codeword block codes for each class, and the full
// classify-then-compress design at a budget.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "crd/codec/codes.hpp"
#include "crd/rd_composite.hpp"

namespace crd {

/// Seeded 53-bit uniform draws and inverse-CDF sampling. Spelled out so the
/// streams do not depend on the standard library's distribution classes.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed, std::uint64_t stream = 0)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
        rng_.seed(seq);
    }

    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1p-53; }

    /// Index drawn from the cumulative table (last entry is the total mass).
    /// upper_bound never lands on a zero-mass entry.
    std::size_t draw(std::span<const double> cdf)
    {
        const double t = uniform() * cdf.back();
        std::size_t i = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), t) - cdf.begin());
        if (i >= cdf.size()) {
            i = cdf.size() - 1;
            while (i > 0 && cdf[i] == cdf[i - 1]) --i;
        }
        return i;
    }

    std::uint64_t next() { return rng_(); }

private:
    std::mt19937_64 rng_;
};

inline std::vector<double> cumulative(std::span<const double> pmf)
{
    std::vector<double> c(pmf.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) c[i] = (acc += pmf[i]);
    return c;
}

struct Codebook {
    std::size_t length = 0;
    std::vector<Sequence> words;
    Matrix distortion;

    /// Lowest-index word minimising sum_j d(x_j, w_j).
    std::size_t nearest(std::span<const Symbol> x) const
    {
        std::size_t best = 0;
        double best_cost = std::numeric_limits<double>::infinity();
        for (std::size_t w = 0; w < words.size(); ++w) {
            double cost = 0.0;
            const auto& word = words[w];
            for (std::size_t j = 0; j < length && cost < best_cost; ++j) cost += distortion(x[j], word[j]);
            if (cost < best_cost) {
                best_cost = cost;
                best = w;
            }
        }
        return best;
    }
};

inline BlockCode block_code(std::shared_ptr<const Codebook> book)
{
    BlockCode bc;
    bc.length = book->length;
    bc.index_bound = BigUint(book->words.size());
    bc.encode = [book](std::span<const Symbol> x) {
        if (x.size() != book->length) throw Error(ErrorCode::LengthMismatch, "block of the wrong length");
        for (Symbol s : x)
            if (s >= book->distortion.rows()) throw Error(ErrorCode::InvalidArgument, "symbol outside the alphabet");
        return BigUint(book->nearest(x));
    };
    bc.decode = [book](const BigUint& i) {
        if (!(i < BigUint(book->words.size()))) throw Error(ErrorCode::MalformedStream, "codeword index out of range");
        return book->words[i.low64()];
    };
    return bc;
}

struct CodebookOptions {
    std::uint64_t seed = 1;
    std::size_t lloyd_iterations = 8;
    std::size_t training_per_word = 4;
    std::size_t min_training = 256;
};

namespace detail {

/// Output marginal of the optimal test channel whose rate is `rate` bits
/// (the closest reachable rate when `rate` exceeds what d can use).
inline std::vector<double> marginal_at_rate(std::span<const double> px, const Matrix& d, double rate)
{
    const Matrix ds[1] = {d};
    auto at = [&](double s) {
        const double m[1] = {s};
        return ba_fixed_multipliers(px, ds, m);
    };
    double lo = 1e-3, hi = 1.0;
    while (at(hi).rate < rate && hi < 1e6) hi *= 4.0;
    if (at(hi).rate < rate) return at(hi).output_marginal;
    for (int it = 0; it < 60 && hi / lo > 1.0 + 1e-6; ++it) {
        const double mid = std::sqrt(lo * hi);
        (at(mid).rate < rate ? lo : hi) = mid;
    }
    return at(hi).output_marginal;
}

} // namespace detail

/// M = floor(2^(n R)) words of length n. Words start as draws from the
/// optimal output marginal at rate R and are refined by Lloyd iterations
/// on a seeded training set; encoding picks the nearest word.
inline std::shared_ptr<const Codebook> design_codebook(std::span<const double> class_pmf, const Matrix& d,
                                                       double target_rate, std::size_t n,
                                                       const CodebookOptions& opt = {})
{
    if (!(target_rate >= 0.0) || !std::isfinite(target_rate)) throw Error(ErrorCode::InvalidArgument, "rate must be >= 0");
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "block length must be >= 1");
    if (d.rows() != class_pmf.size()) throw Error(ErrorCode::ShapeMismatch, "distortion rows must match the pmf");
    const double bits = static_cast<double>(n) * target_rate;
    if (bits > 40.0) throw Error(ErrorCode::InvalidArgument, "codebook would exceed 2^40 words");
    const auto m = static_cast<std::size_t>(std::floor(std::exp2(bits) * (1.0 + 1e-12)));
    const std::size_t ny = d.cols();

    auto book = std::make_shared<Codebook>();
    book->length = n;
    book->distortion = d;

    // Per-letter best constant reproduction (lowest index on ties).
    std::size_t best_y = 0;
    {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t y = 0; y < ny; ++y) {
            double e = 0.0;
            for (std::size_t x = 0; x < class_pmf.size(); ++x) e += class_pmf[x] * d(x, y);
            if (e < best) {
                best = e;
                best_y = y;
            }
        }
    }
    if (m == 1) {
        book->words.assign(1, Sequence(n, static_cast<Symbol>(best_y)));
        return book;
    }

    Sampler rng(opt.seed, 0x636f6465626f6f6bull);
    const auto q = detail::marginal_at_rate(class_pmf, d, target_rate);
    const auto qc = cumulative(q);
    const double distinct_words = std::pow(static_cast<double>(ny), static_cast<double>(n));
    for (std::size_t w = 0; w < m; ++w) {
        Sequence word(n);
        for (int attempt = 0; attempt < 64; ++attempt) {
            for (auto& s : word) s = static_cast<Symbol>(rng.draw(qc));
            if (static_cast<double>(m) > distinct_words ||
                std::find(book->words.begin(), book->words.end(), word) == book->words.end())
                break;
        }
        book->words.push_back(word);
    }

    const auto pc = cumulative(class_pmf);
    const std::size_t t = std::max(opt.min_training, opt.training_per_word * m);
    std::vector<Sequence> train(t, Sequence(n));
    for (auto& v : train)
        for (auto& s : v) s = static_cast<Symbol>(rng.draw(pc));

    double previous = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> cell(t);
    for (std::size_t it = 0; it < opt.lloyd_iterations; ++it) {
        double total = 0.0;
        for (std::size_t i = 0; i < t; ++i) {
            cell[i] = book->nearest(train[i]);
            for (std::size_t j = 0; j < n; ++j) total += d(train[i][j], book->words[cell[i]][j]);
        }
        if (!(total < previous - 1e-12)) break;
        previous = total;
        // counts[w][j][x]: how often symbol x sits at position j in cell w.
        std::vector<std::vector<std::vector<std::uint32_t>>> counts(
            m, std::vector<std::vector<std::uint32_t>>(n, std::vector<std::uint32_t>(class_pmf.size(), 0)));
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < n; ++j) ++counts[cell[i]][j][train[i][j]];
        for (std::size_t w = 0; w < m; ++w)
            for (std::size_t j = 0; j < n; ++j) {
                double best = std::numeric_limits<double>::infinity();
                Symbol pick = book->words[w][j];
                bool any = false;
                for (std::size_t x = 0; x < class_pmf.size(); ++x) any = any || counts[w][j][x] > 0;
                if (!any) continue;  // empty cell keeps its word
                for (std::size_t y = 0; y < ny; ++y) {
                    double cost = 0.0;
                    for (std::size_t x = 0; x < class_pmf.size(); ++x) cost += counts[w][j][x] * d(x, y);
                    if (cost < best) {
                        best = cost;
                        pick = static_cast<Symbol>(y);
                    }
                }
                book->words[w][j] = pick;
            }
    }
    return book;
}

inline BlockCode design_class_codebook(std::span<const double> class_pmf, const Matrix& d, double target_rate,
                                       std::size_t n, const CodebookOptions& opt = {})
{
    return block_code(design_codebook(class_pmf, d, target_rate, n, opt));
}

struct CtcDesignOptions {
    std::size_t block_length = 16;
    double rate_slack = 0.06;     ///< added to each class's R*_u before sizing codebooks
    CodebookOptions codebook;
    AllocationOptions allocation;
};

struct CtcDesign {
    CTCCode ctc;
    AllocationResult allocation;
    std::vector<double> class_code_rates;  ///< nominal bits/symbol of each class code
    double label_entropy = 0.0;
    double nominal_rate = 0.0;             ///< H(c(X)) + sum_u P(u) class rate
};

/// Builds the per-class codes at the R^G allocation for `budget` and wraps
/// them with a lossless label code.
inline CtcDesign design_ctc(const SourceModel& model, const DistortionBudget& budget, const CtcDesignOptions& opt = {})
{
    if (opt.block_length == 0) throw Error(ErrorCode::InvalidArgument, "block length must be >= 1");
    CtcDesign out;
    out.allocation = r_g(model, budget, opt.allocation);
    const auto& src = model.source;
    const auto pu = label_probabilities(src, model.classifier);
    const std::size_t nu = pu.size();
    const auto px = src.symbol_marginal();
    out.label_entropy = entropy_bits(pu);

    std::vector<VariableLengthCode> classes(nu);
    std::vector<bool> active(nu, false);
    out.class_code_rates.assign(nu, 0.0);
    for (std::size_t u = 0; u < nu; ++u) {
        if (!(pu[u] > 0.0)) {
            classes[u] = gamma_length_code(0);
            continue;
        }
        active[u] = true;
        const auto cm = detail::class_model(model, u);
        const auto cpx = cm.source.symbol_marginal();
        // Design measure: multiplier-weighted sum of the class's modified
        // measures (equal weights when no multiplier is positive).
        Matrix d(src.num_symbols(), src.num_reproductions(), 0.0);
        std::vector<std::pair<Matrix, double>> terms;
        bool any_weight = false;
        for (std::size_t l : active_criteria(cm.source, cm.criteria)) {
            const double w = out.allocation.multipliers.empty() ? 0.0 : out.allocation.multipliers[l];
            any_weight = any_weight || w > 0.0;
            terms.emplace_back(modified_distortion(cm.source, cm.criteria[l]), w);
        }
        for (const auto& [m, w] : terms)
            for (std::size_t i = 0; i < d.data().size(); ++i) d.data()[i] += (any_weight ? w : 1.0) * m.data()[i];

        // The full-length codebook fixes the family rate log2(M_b)/b; shorter
        // remainder blocks are sized at that rate so every length fits.
        const std::size_t b = opt.block_length;
        std::vector<BlockCode> by_length(b + 1);
        auto design = [&](std::size_t r, double rate) {
            CodebookOptions co = opt.codebook;
            co.seed = opt.codebook.seed * 1000003u + u * 101u + r;
            by_length[r] = design_class_codebook(cpx, d, rate, r, co);
        };
        design(b, out.allocation.class_rates[u] + opt.rate_slack);
        const double target = by_length[b].index_bound.log2() / static_cast<double>(b);
        for (std::size_t r = 1; r < b; ++r) design(r, target);
        out.class_code_rates[u] = target;
        classes[u] = vlc_from_blocks(product_family(std::move(by_length)), target);
        out.nominal_rate += pu[u] * target;
    }
    out.nominal_rate += out.label_entropy;
    std::vector<std::size_t> order(nu);
    for (std::size_t u = 0; u < nu; ++u) order[u] = u;
    out.ctc = assemble_ctc(lossless_label_code(pu), assemble_label_based(std::move(classes), std::move(active), order),
                           model.classifier);
    return out;
}

} // namespace crd
