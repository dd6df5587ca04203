#pragma once

// The three reference instances: a 2x2 source with per-state Hamming
// criteria, a perfectly classified quaternary source, and a two-component
// Gaussian mixture seen through an 8-bit quantizer.

#include <cmath>
#include <cstdio>
#include <string>

#include "crd/model.hpp"

namespace crd {

namespace detail {

/// P(a <= Y < b) for Y ~ N(mean, variance); infinite ends allowed.
inline double normal_mass(double a, double b, double mean, double variance)
{
    const double scale = std::sqrt(2.0 * variance);
    // Upper tails through erfc keep both ends free of cancellation.
    auto upper = [&](double t) { return std::isinf(t) ? (t > 0 ? 0.0 : 1.0) : 0.5 * std::erfc((t - mean) / scale); };
    auto lower = [&](double t) { return std::isinf(t) ? (t > 0 ? 1.0 : 0.0) : 0.5 * std::erfc((mean - t) / scale); };
    if (b <= mean) return lower(b) - lower(a);
    if (a >= mean) return upper(a) - upper(b);
    return 1.0 - lower(a) - upper(b);
}

inline std::string format_level(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline SourceModel example1()
{
    SourceModel m;
    m.source = CompositeSource::create({"0", "1"}, {"0", "1"}, {"0", "1"},
                                       Matrix::from_rows({{0.1, 0.4}, {0.3, 0.2}}));
    m.classifier = Classifier::identity(m.source.symbols());
    m.criteria = {{"0", hamming_distortion(2, 2), {true, false}},
                  {"1", hamming_distortion(2, 2), {false, true}}};
    return m;
}

inline SourceModel example2()
{
    SourceModel m;
    Matrix joint(4, 4, 0.0);
    for (std::size_t i = 0; i < 4; ++i) joint(i, i) = 0.25;
    m.source = CompositeSource::create({"0", "1", "2", "3"}, {"0", "1", "2", "3"}, {"0", "1", "2", "3"}, joint);
    m.classifier = {{"0", "1"}, {0, 0, 1, 1}};
    m.criteria = {{"0", hamming_distortion(4, 4), {true, true, false, false}},
                  {"1", hamming_distortion(4, 4), {false, false, true, true}}};
    return m;
}

/// Symbols are cell midpoints k/256 + 1/512. Y | S=0 ~ N(0.3, 0.04),
/// Y | S=1 ~ N(0.7, 0.04), S uniform; cells 0 and 255 absorb the tails.
inline SourceModel example3()
{
    constexpr std::size_t cells = 256;
    constexpr double variance = 0.04;
    const double means[2] = {0.3, 0.7};

    std::vector<std::string> names;
    std::vector<double> points;
    for (std::size_t k = 0; k < cells; ++k) {
        points.push_back(static_cast<double>(k) / 256.0 + 1.0 / 512.0);
        names.push_back(detail::format_level(points.back()));
    }
    Matrix joint(2, cells);
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t k = 0; k < cells; ++k) {
            const double a = k == 0 ? -INFINITY : static_cast<double>(k) / 256.0;
            const double b = k == cells - 1 ? INFINITY : static_cast<double>(k + 1) / 256.0;
            joint(s, k) = 0.5 * detail::normal_mass(a, b, means[s], variance);
        }
    Matrix sq(cells, cells);
    for (std::size_t i = 0; i < cells; ++i)
        for (std::size_t j = 0; j < cells; ++j) sq(i, j) = (points[i] - points[j]) * (points[i] - points[j]);

    SourceModel m;
    m.source = CompositeSource::create({"0", "1"}, names, names, joint);
    m.classifier.labels = {"0", "1"};
    for (std::size_t k = 0; k < cells; ++k) m.classifier.map.push_back(points[k] < 0.5 ? 0 : 1);
    m.criteria = {{"0", sq, {true, false}}, {"1", sq, {false, true}}};
    return m;
}

inline SourceModel build_example(const std::string& name)
{
    if (name == "example1") return example1();
    if (name == "example2") return example2();
    if (name == "example3") return example3();
    throw Error(ErrorCode::UnknownExample, "unknown example '" + name + "' (expected example1|example2|example3)");
}

} // namespace crd
