#pragma once

// Composite-source model: the joint law of (S, X), the classifier c, and the
// family of subsource-dependent fidelity criteria, plus the derived
// quantities every solver consumes.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "crd/error.hpp"
#include "crd/info.hpp"
#include "crd/matrix.hpp"

namespace crd {

using Symbol = std::uint32_t;

/// Input pmfs may deviate from unit mass by at most this much before they
/// are rejected; within it they are renormalized.
inline constexpr double kInputNormTolerance = 1e-9;

/// Memoryless composite source: alphabets for states, symbols and
/// reproductions together with the joint pmf P[s][x]. Immutable once built.
class CompositeSource {
public:
    CompositeSource() = default;

    static CompositeSource create(std::vector<std::string> states, std::vector<std::string> symbols,
                                  std::vector<std::string> reproductions, Matrix joint)
    {
        if (states.empty() || symbols.empty() || reproductions.empty())
            throw Error(ErrorCode::EmptyAlphabet, "state, symbol and reproduction alphabets must be non-empty");
        if (joint.rows() != states.size() || joint.cols() != symbols.size())
            throw Error(ErrorCode::ShapeMismatch, "joint_pmf must be states x symbols");
        double total = 0.0;
        for (double p : joint.data()) {
            if (!std::isfinite(p)) throw Error(ErrorCode::NonStochastic, "joint_pmf entry is not finite");
            if (p < 0.0) throw Error(ErrorCode::NegativeEntry, "joint_pmf has a negative entry");
            if (p > 1.0) throw Error(ErrorCode::NonStochastic, "joint_pmf entry exceeds 1");
            total += p;
        }
        if (std::abs(total - 1.0) > kInputNormTolerance)
            throw Error(ErrorCode::NonStochastic, "joint_pmf sums to " + std::to_string(total));
        for (double& p : joint.data()) p /= total;

        CompositeSource s;
        s.states_ = std::move(states);
        s.symbols_ = std::move(symbols);
        s.reproductions_ = std::move(reproductions);
        s.joint_ = std::move(joint);
        return s;
    }

    const std::vector<std::string>& states() const noexcept { return states_; }
    const std::vector<std::string>& symbols() const noexcept { return symbols_; }
    const std::vector<std::string>& reproductions() const noexcept { return reproductions_; }
    const Matrix& joint() const noexcept { return joint_; }

    std::size_t num_states() const noexcept { return states_.size(); }
    std::size_t num_symbols() const noexcept { return symbols_.size(); }
    std::size_t num_reproductions() const noexcept { return reproductions_.size(); }

    std::vector<double> symbol_marginal() const
    {
        std::vector<double> px(num_symbols(), 0.0);
        for (std::size_t s = 0; s < num_states(); ++s)
            for (std::size_t x = 0; x < num_symbols(); ++x) px[x] += joint_(s, x);
        return px;
    }

    std::vector<double> state_marginal() const
    {
        std::vector<double> ps(num_states(), 0.0);
        for (std::size_t s = 0; s < num_states(); ++s)
            for (std::size_t x = 0; x < num_symbols(); ++x) ps[s] += joint_(s, x);
        return ps;
    }

    /// Same alphabets, different joint law (validated like any input).
    CompositeSource with_joint(Matrix joint) const
    {
        return create(states_, symbols_, reproductions_, std::move(joint));
    }

private:
    std::vector<std::string> states_;
    std::vector<std::string> symbols_;
    std::vector<std::string> reproductions_;
    Matrix joint_;
};

/// Total map from symbol positions to label positions.
struct Classifier {
    std::vector<std::string> labels;
    std::vector<std::size_t> map;

    std::size_t num_labels() const noexcept { return labels.size(); }
    std::size_t operator()(std::size_t x) const noexcept { return map[x]; }

    static Classifier single_class(std::size_t num_symbols, std::string label = "0")
    {
        return {{std::move(label)}, std::vector<std::size_t>(num_symbols, 0)};
    }

    static Classifier identity(const std::vector<std::string>& symbols)
    {
        Classifier c{symbols, {}};
        for (std::size_t x = 0; x < symbols.size(); ++x) c.map.push_back(x);
        return c;
    }

    void validate(std::size_t num_symbols) const
    {
        if (labels.empty()) throw Error(ErrorCode::EmptyAlphabet, "classifier has no labels");
        if (map.size() != num_symbols) throw Error(ErrorCode::ShapeMismatch, "classifier must label every symbol");
        for (std::size_t u : map)
            if (u >= labels.size()) throw Error(ErrorCode::ShapeMismatch, "classifier maps to an unknown label");
    }
};

/// (d_lambda, S_lambda): distortion on symbols x reproductions, applied to
/// the positions whose state lies in the subset.
struct FidelityCriterion {
    std::string id;
    Matrix distortion;
    std::vector<bool> state_subset;

    void validate(const CompositeSource& source) const
    {
        if (distortion.rows() != source.num_symbols() || distortion.cols() != source.num_reproductions())
            throw Error(ErrorCode::ShapeMismatch, "criterion '" + id + "' distortion must be symbols x reproductions");
        if (state_subset.size() != source.num_states())
            throw Error(ErrorCode::ShapeMismatch, "criterion '" + id + "' state subset has wrong size");
        for (double v : distortion.data()) {
            if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "criterion '" + id + "' has a non-finite distortion");
            if (v < 0.0) throw Error(ErrorCode::NegativeEntry, "criterion '" + id + "' has a negative distortion");
        }
    }
};

/// D(lambda) for each criterion, in criterion order.
using DistortionBudget = std::vector<double>;

/// Everything a solver needs: the source, a classifier and the criteria.
struct SourceModel {
    CompositeSource source;
    Classifier classifier;
    std::vector<FidelityCriterion> criteria;

    void validate() const
    {
        classifier.validate(source.num_symbols());
        for (const auto& c : criteria) c.validate(source);
    }

    void validate_budget(const DistortionBudget& budget) const
    {
        if (budget.size() != criteria.size())
            throw Error(ErrorCode::ShapeMismatch, "budget must have one level per criterion");
        for (double d : budget)
            if (!(d >= 0.0) || !std::isfinite(d))
                throw Error(ErrorCode::InvalidArgument, "distortion levels must be finite and non-negative");
    }
};

inline Matrix hamming_distortion(std::size_t symbols, std::size_t reproductions)
{
    Matrix d(symbols, reproductions, 1.0);
    for (std::size_t i = 0; i < std::min(symbols, reproductions); ++i) d(i, i) = 0.0;
    return d;
}

/// P(S in S_lambda).
inline double subset_probability(const CompositeSource& source, const FidelityCriterion& criterion)
{
    double p = 0.0;
    for (std::size_t s = 0; s < source.num_states(); ++s)
        if (criterion.state_subset[s])
            for (std::size_t x = 0; x < source.num_symbols(); ++x) p += source.joint()(s, x);
    return p;
}

/// P(S in S_lambda | X = x) for every x (0 where P(X = x) = 0).
inline std::vector<double> subset_posterior(const CompositeSource& source, const FidelityCriterion& criterion)
{
    const auto px = source.symbol_marginal();
    std::vector<double> post(source.num_symbols(), 0.0);
    for (std::size_t x = 0; x < source.num_symbols(); ++x) {
        if (px[x] <= 0.0) continue;
        double in = 0.0;
        for (std::size_t s = 0; s < source.num_states(); ++s)
            if (criterion.state_subset[s]) in += source.joint()(s, x);
        post[x] = in / px[x];
    }
    return post;
}

/// Positions of criteria with P(S in S_lambda) > 0 (exact threshold).
inline std::vector<std::size_t> active_criteria(const CompositeSource& source,
                                                const std::vector<FidelityCriterion>& criteria)
{
    std::vector<std::size_t> active;
    for (std::size_t l = 0; l < criteria.size(); ++l)
        if (subset_probability(source, criteria[l]) > 0.0) active.push_back(l);
    return active;
}

/// P(c(X) = u) for every label.
inline std::vector<double> label_probabilities(const CompositeSource& source, const Classifier& classifier)
{
    const auto px = source.symbol_marginal();
    std::vector<double> pu(classifier.num_labels(), 0.0);
    for (std::size_t x = 0; x < px.size(); ++x) pu[classifier(x)] += px[x];
    return pu;
}

/// Labels with P(c(X) = u) > 0.
inline std::vector<std::size_t> active_labels(const CompositeSource& source, const Classifier& classifier)
{
    const auto pu = label_probabilities(source, classifier);
    std::vector<std::size_t> active;
    for (std::size_t u = 0; u < pu.size(); ++u)
        if (pu[u] > 0.0) active.push_back(u);
    return active;
}

/// P(S in S_lambda, c(X) = u) for every label.
inline std::vector<double> subset_label_probabilities(const CompositeSource& source, const Classifier& classifier,
                                                      const FidelityCriterion& criterion)
{
    std::vector<double> out(classifier.num_labels(), 0.0);
    for (std::size_t s = 0; s < source.num_states(); ++s) {
        if (!criterion.state_subset[s]) continue;
        for (std::size_t x = 0; x < source.num_symbols(); ++x) out[classifier(x)] += source.joint()(s, x);
    }
    return out;
}

/// Conditional law of (S, X) given c(X) = u, as a source on the same alphabets.
inline CompositeSource class_conditional(const CompositeSource& source, const Classifier& classifier, std::size_t u)
{
    const auto pu = label_probabilities(source, classifier);
    if (u >= pu.size() || !(pu[u] > 0.0))
        throw Error(ErrorCode::ZeroProbabilityClass, "label has zero probability");
    Matrix joint(source.num_states(), source.num_symbols(), 0.0);
    for (std::size_t s = 0; s < source.num_states(); ++s)
        for (std::size_t x = 0; x < source.num_symbols(); ++x)
            if (classifier(x) == u) joint(s, x) = source.joint()(s, x) / pu[u];
    return source.with_joint(std::move(joint));
}

/// H(c(X)) in bits.
inline double label_entropy(const CompositeSource& source, const Classifier& classifier)
{
    return entropy_bits(label_probabilities(source, classifier));
}

/// d^_lambda(x, x^) = P(S in S_lambda | X = x) / P(S in S_lambda) * d_lambda(x, x^).
/// Under any channel that sees only X, E[d^_lambda(X, X^)] = E[d_lambda(X, X^) | S in S_lambda].
inline Matrix modified_distortion(const CompositeSource& source, const FidelityCriterion& criterion)
{
    const double p_subset = subset_probability(source, criterion);
    if (!(p_subset > 0.0))
        throw Error(ErrorCode::InactiveCriterion, "criterion '" + criterion.id + "' has P(S in S_lambda) = 0");
    const auto post = subset_posterior(source, criterion);
    Matrix out(criterion.distortion.rows(), criterion.distortion.cols());
    for (std::size_t x = 0; x < out.rows(); ++x) {
        const double w = post[x] / p_subset;
        for (std::size_t y = 0; y < out.cols(); ++y) out(x, y) = w * criterion.distortion(x, y);
    }
    return out;
}

} // namespace crd
